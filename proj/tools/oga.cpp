#include <iostream>
#include <optional>

#include "oga/error.hpp"
#include "oga/pipeline.hpp"

#include <CLI11.hpp>

using namespace oga;
using namespace oga::pipeline;

namespace {

struct Common {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out;
    bool json = false;
};

void add_common(CLI::App* cmd, Common& c, bool with_json = false) {
    cmd->add_option("--config", c.config_path, "flat key = value config file (defaults when omitted)");
    cmd->add_option("--seed", c.seed, "overrides the config seed");
    cmd->add_option("--out", c.out, "run directory, overrides out_dir");
    if (with_json) cmd->add_flag("--json", c.json, "machine-readable output");
}

PipelineConfig resolve(const Common& c) {
    PipelineConfig config = c.config_path.empty() ? PipelineConfig{} : load_config(c.config_path);
    if (c.seed) config.seed = *c.seed;
    if (!c.out.empty()) config.out_dir = c.out;
    config.validate();
    return config;
}

template <class Fn>
void run_stage(const char* name, const Common& c, Fn&& fn) {
    const auto config = resolve(c);
    try {
        fn(config, RunPaths{config.out_dir});
    } catch (const Error& e) {
        throw StageError(name, e);
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Open-world graph annotation: rejection, community annotation and evaluation"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    Common c;
    auto* pipeline = app.add_subcommand("pipeline", "run every stage and write run_manifest.json");
    add_common(pipeline, c, true);
    auto* ingest = app.add_subcommand("ingest", "load the graph and embeddings into the run directory");
    add_common(ingest, c);
    auto* train = app.add_subcommand("alt-train", "train the rejection model");
    add_common(train, c);
    auto* infer = app.add_subcommand("alt-infer", "classify or reject every node");
    add_common(infer, c);
    auto* communities = app.add_subcommand("communities", "detect communities among rejected nodes");
    add_common(communities, c);
    auto* annotate = app.add_subcommand("annotate", "label rejected nodes through the LLM gateway");
    add_common(annotate, c, true);
    auto* evaluate = app.add_subcommand("evaluate", "compute metrics.json against the ground truth");
    add_common(evaluate, c);
    auto* synth = app.add_subcommand("synth", "write the synthetic benchmark (graph, embeddings, truth)");
    add_common(synth, c);
    auto* report = app.add_subcommand("report", "summarise a run directory");
    add_common(report, c, true);
    auto* defaults = app.add_subcommand("default-config", "print a complete config with default values");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(ExitCode::config);
    }

    try {
        if (*defaults) {
            PipelineConfig config;
            std::cout << format_config(config);
        } else if (*pipeline) {
            const auto config = resolve(c);
            const auto timings = run_pipeline(config);
            if (c.json && std::filesystem::exists(RunPaths{config.out_dir}.metrics())) {
                print_report(config.out_dir, std::cout, true);
            } else if (c.json) {
                std::cout << "{\"run_dir\": \"" << config.out_dir << "\", \"metrics\": null}\n";
            } else {
                for (const auto& t : timings) std::cout << t.stage << " done in " << t.seconds << " s\n";
                std::cout << "run directory " << config.out_dir << "\n";
            }
        } else if (*ingest) {
            run_stage("ingest", c, stage_ingest);
        } else if (*train) {
            run_stage("alt-train", c, stage_alt_train);
        } else if (*infer) {
            run_stage("alt-infer", c, stage_alt_infer);
        } else if (*communities) {
            run_stage("communities", c, stage_communities);
        } else if (*annotate) {
            std::uint64_t calls = 0;
            run_stage("annotate", c, [&](const PipelineConfig& cfg, const RunPaths& run) {
                calls = stage_annotate(cfg, run);
            });
            if (c.json) std::cout << "{\"llm_calls\": " << calls << "}\n";
            else std::cout << "llm calls " << calls << "\n";
        } else if (*evaluate) {
            run_stage("evaluate", c, stage_evaluate);
        } else if (*synth) {
            run_stage("synth", c, [](const PipelineConfig& cfg, const RunPaths& run) {
                write_synthetic(cfg.synth, run.dir);
            });
        } else if (*report) {
            const std::string dir = c.out.empty() ? resolve(c).out_dir : c.out;
            print_report(dir, std::cout, c.json);
        }
    } catch (const StageError& e) {
        std::cerr << "error in stage " << e.what() << "\n";
        return static_cast<int>(e.exit_code());
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(e.exit_code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(ExitCode::data);
    }
    return 0;
}
