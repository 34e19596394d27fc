#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "oga/error.hpp"
#include "oga/pipeline.hpp"
#include "support/fixtures.hpp"

#include <json.hpp>

using namespace oga;
using namespace oga::pipeline;
using oga::testing::TempDir;
using oga::testing::write_text;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

PipelineConfig small_config(const std::filesystem::path& out) {
    PipelineConfig c;
    c.out_dir = out.string();
    c.synth.nodes_per_class = 25;
    c.synth.p_intra = 0.2;
    c.alt.epochs = 80;
    c.alt.hidden = 16;
    c.backbone.epochs = 60;
    c.llm_cache = false;
    return c;
}

std::string drop_line(const std::string& text, const std::string& key) {
    std::istringstream in(text);
    std::string line, out;
    while (std::getline(in, line))
        if (line.rfind(key + " =", 0) != 0) out += line + "\n";
    return out;
}

struct Captured {
    int code;
    std::string out;
};

Captured run_cli(const std::string& args) {
    const std::string cmd = std::string(OGA_CLI_PATH) + " " + args + " 2>&1";
    Captured c{0, {}};
    FILE* pipe = ::popen(cmd.c_str(), "r");
    REQUIRE(pipe);
    std::array<char, 512> buf{};
    while (std::fgets(buf.data(), buf.size(), pipe)) c.out += buf.data();
    const int status = ::pclose(pipe);
    c.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return c;
}

} // namespace

TEST_CASE("config text round trip") {
    PipelineConfig a;
    a.seed = 42;
    a.alt.epsilon = 0.55;
    a.gla.gamma = 0.25;
    a.synth.seed = 11;
    a.llm_cache = false;
    const auto text = format_config(a);
    auto b = parse_config(text);
    CHECK(format_config(b) == text);
    CHECK(b.alt.seed == 42);
    CHECK(b.gla.seed == 42);
    CHECK(b.backbone.seed == 42);
    CHECK(b.synth.seed == 11);
}

TEST_CASE("config errors name the key") {
    PipelineConfig d;
    const auto text = format_config(d);
    auto fails_with = [](const std::string& t, const std::string& needle) {
        try {
            parse_config(t, "cfg");
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find(needle) != std::string::npos);
            CHECK(e.exit_code() == ExitCode::config);
        }
    };
    SUBCASE("missing epochs") { fails_with(drop_line(text, "epochs"), "`epochs`"); }
    SUBCASE("unknown key") { fails_with(text + "bogus = 1\n", "unknown config key `bogus`"); }
    SUBCASE("repeated key") { fails_with(text + "lambda = 3\n", "repeated config key `lambda`"); }
    SUBCASE("bad value") { fails_with(drop_line(text, "lambda") + "lambda = fast\n", "lambda"); }
    SUBCASE("no equals sign") { fails_with(text + "lambda\n", "cfg:"); }
}

TEST_CASE("comments and blank lines are ignored") {
    PipelineConfig d;
    auto text = "# header\n\n" + drop_line(format_config(d), "lambda") + "lambda = 7.5   # sharper\n";
    CHECK(parse_config(text).alt.lambda == 7.5);
}

TEST_CASE("validation fails fast") {
    PipelineConfig c;
    SUBCASE("http without endpoint") {
        ::unsetenv("OGA_LLM_ENDPOINT");
        ::unsetenv("OGA_LLM_API_KEY");
        c.llm_mode = "http";
        TempDir dir;
        c.out_dir = (dir / "run").string();
        CHECK_THROWS_AS(run_pipeline(c), ConfigError);
        CHECK_FALSE(std::filesystem::exists(dir / "run"));
    }
    SUBCASE("files mode without paths") {
        c.input = "files";
        CHECK_THROWS_AS(c.validate(), ConfigError);
    }
    SUBCASE("unknown input") {
        c.input = "web";
        CHECK_THROWS_AS(c.validate(), ConfigError);
    }
}

TEST_CASE("pipeline is deterministic across runs and worker counts") {
    TempDir dir;
    auto a = small_config(dir / "a");
    auto b = small_config(dir / "b");
    auto c = small_config(dir / "c");
    c.llm_max_inflight = 1;
    run_pipeline(a);
    run_pipeline(b);
    run_pipeline(c);
    for (const char* name : {"metrics.json", "ledger.json", "communities.json", "rejection.csv",
                             "augmented_labels.csv", "llm_calls.json"}) {
        CAPTURE(name);
        const auto ref = slurp(dir / "a" / name);
        CHECK_FALSE(ref.empty());
        CHECK(ref == slurp(dir / "b" / name));
        CHECK(ref == slurp(dir / "c" / name));
    }
}

TEST_CASE("stages run one at a time match the full pipeline") {
    TempDir dir;
    auto full = small_config(dir / "full");
    run_pipeline(full);
    auto step = small_config(dir / "step");
    step.validate();
    const RunPaths run{step.out_dir};
    stage_ingest(step, run);
    stage_alt_train(step, run);
    stage_alt_infer(step, run);
    stage_communities(step, run);
    const auto calls = stage_annotate(step, run);
    stage_evaluate(step, run);
    CHECK(slurp(dir / "full" / "metrics.json") == slurp(dir / "step" / "metrics.json"));
    const auto metrics = eval::read_metrics_json(run.metrics());
    CHECK(metrics.llm_calls.actual == calls);
    gla::GlaStats stats;
    gla::read_ledger_json(run.ledger(), &stats);
    CHECK(stats.total() == calls); // cache off
}

TEST_CASE("stage errors carry the stage name and exit code") {
    TempDir dir;
    auto c = small_config(dir / "run");
    c.validate();
    try {
        stage_communities(c, RunPaths{c.out_dir});
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("ingest") != std::string::npos);
    }
    const StageError wrapped("alt-train", NumericError("loss is nan"));
    CHECK(wrapped.exit_code() == ExitCode::numeric);
    CHECK(std::string(wrapped.what()) == "alt-train: loss is nan");
}

TEST_CASE("files mode with mock embeddings and no truth") {
    TempDir dir;
    write_text(dir / "nodes.csv",
               "node_id,label,text\n0,neural,neural network layers\n1,neural,deep neural network\n"
               "2,,neural network training\n3,rules,rule learning systems\n4,rules,learning logical rules\n"
               "5,,rule induction learning\n6,,genetic algorithm search\n7,,evolving genetic algorithm\n");
    write_text(dir / "edges.csv", "src,dst\n0,1\n1,2\n0,2\n3,4\n4,5\n3,5\n6,7\n2,6\n");
    PipelineConfig c;
    c.input = "files";
    c.nodes = (dir / "nodes.csv").string();
    c.edges = (dir / "edges.csv").string();
    c.embed_dim = 32;
    c.alt.epochs = 30;
    c.alt.hidden = 8;
    c.alt.k = 2;
    c.out_dir = (dir / "run").string();
    const auto timings = run_pipeline(c);
    CHECK(timings.size() == 5); // no evaluate without truth
    CHECK(std::filesystem::exists(dir / "run" / "ledger.json"));
    CHECK_FALSE(std::filesystem::exists(dir / "run" / "metrics.json"));

    std::ostringstream text;
    try {
        print_report(dir / "run", text, false);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("metrics.json") != std::string::npos);
    }
}

TEST_CASE("report with metrics") {
    TempDir dir;
    auto c = small_config(dir / "run");
    run_pipeline(c);
    std::ostringstream js;
    print_report(dir / "run", js, true);
    CHECK(js.str() == slurp(dir / "run" / "metrics.json"));
    std::ostringstream text;
    print_report(dir / "run", text, false);
    CHECK(text.str().find("coverage") != std::string::npos);
    CHECK(text.str().find("reduction") != std::string::npos);
    CHECK(text.str().find('%') != std::string::npos);
    CHECK_THROWS_AS(print_report(dir / "missing", text, false), DataError);

    const auto manifest = nlohmann::json::parse(slurp(dir / "run" / "run_manifest.json"));
    CHECK(manifest.at("version") == kVersion);
    CHECK(manifest.at("config").at("epochs") == "80");
    CHECK(parse_config(manifest.at("config_text").get<std::string>()).alt.epochs == 80);
}

TEST_CASE("command line") {
    TempDir dir;
    SUBCASE("default config parses back") {
        const auto r = run_cli("default-config");
        CHECK(r.code == 0);
        CHECK_NOTHROW(parse_config(r.out));
    }
    SUBCASE("exit codes") {
        CHECK(run_cli("pipeline --bogus").code == 2);
        PipelineConfig d;
        write_text(dir / "bad.cfg", drop_line(format_config(d), "epochs"));
        const auto bad = run_cli("pipeline --config " + (dir / "bad.cfg").string());
        CHECK(bad.code == 2);
        CHECK(bad.out.find("epochs") != std::string::npos);
        const auto missing = run_cli("annotate --out " + (dir / "nothing").string());
        CHECK(missing.code == 3);
        CHECK(missing.out.find("annotate") != std::string::npos);
        CHECK(run_cli("report --out " + (dir / "nothing").string()).code == 3);
    }
    SUBCASE("pipeline with --json and --seed") {
        auto c = small_config(dir / "unused");
        write_text(dir / "small.cfg", format_config(c));
        const auto r = run_cli("pipeline --json --seed 3 --config " + (dir / "small.cfg").string() + " --out " +
                               (dir / "run").string());
        REQUIRE(r.code == 0);
        const auto doc = nlohmann::json::parse(r.out);
        CHECK(doc.at("llm_calls").contains("reduction"));
        CHECK(r.out == slurp(dir / "run" / "metrics.json"));
        const auto manifest = nlohmann::json::parse(slurp(dir / "run" / "run_manifest.json"));
        CHECK(manifest.at("seeds").at("seed") == 3);
        CHECK(manifest.at("config").at("seed") == "3");
    }
}
