#pragma once

// End-to-end orchestration: flat config file, individual stages writing
// plain files into one run directory, run manifest and report.

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "oga/alt.hpp"
#include "oga/eval.hpp"
#include "oga/gla.hpp"
#include "oga/llm.hpp"

namespace oga::pipeline {

inline constexpr const char* kVersion = "0.1.0";

struct PipelineConfig {
    std::string input = "synth";   ///< `synth` or `files`
    std::string nodes;             ///< node CSV (files mode)
    std::string edges;             ///< edge CSV (files mode)
    std::string embeddings;        ///< binary embeddings; empty = mock encoder (files mode)
    std::string truth;             ///< optional truth CSV for evaluation (files mode)
    std::string out_dir = "run";
    std::size_t embed_dim = 64;    ///< mock encoder width
    std::uint64_t seed = 0;        ///< ALT, GLA, backbone and mock encoder

    alt::AltConfig alt;
    gla::GlaConfig gla;
    eval::SyntheticSpec synth;
    eval::BackboneConfig backbone;
    std::size_t quality_embed_dim = 64;

    std::string llm_mode = "mock";
    std::string llm_endpoint;
    std::string llm_model;
    double llm_timeout_seconds = 30.0;
    int llm_max_retries = 2;
    bool llm_cache = true;
    std::string llm_cache_dir;
    int llm_max_inflight = 4;

    /// Every key in file order; the credential is never part of the config.
    FieldList fields();
    /// Copies the global seed into the module configs.
    void propagate_seed();
    void validate();
    /// Backend settings after environment overrides.
    llm::BackendConfig backend() const;
};

/// The whole config as `key = value` lines.
std::string format_config(PipelineConfig& config);

/// Parses the flat format: `#` comments, blank lines, `key = value`.  Every
/// key is required, unknown and repeated keys are errors.
PipelineConfig parse_config(std::string_view text, const std::string& origin = "config");
PipelineConfig load_config(const std::filesystem::path& path);

/// Fixed file names inside the run directory.
struct RunPaths {
    std::filesystem::path dir;
    std::filesystem::path nodes() const { return dir / "nodes.csv"; }
    std::filesystem::path edges() const { return dir / "edges.csv"; }
    std::filesystem::path embeddings() const { return dir / "embeddings.bin"; }
    std::filesystem::path truth() const { return dir / "truth.csv"; }
    std::filesystem::path model() const { return dir / "alt_model.bin"; }
    std::filesystem::path rejection() const { return dir / "rejection.csv"; }
    std::filesystem::path communities() const { return dir / "communities.json"; }
    std::filesystem::path ledger() const { return dir / "ledger.json"; }
    std::filesystem::path augmented() const { return dir / "augmented_labels.csv"; }
    std::filesystem::path gateway() const { return dir / "llm_calls.json"; }
    std::filesystem::path metrics() const { return dir / "metrics.json"; }
    std::filesystem::path manifest() const { return dir / "run_manifest.json"; }
};

/// Thrown by the stage runner: keeps the exit code of the underlying error
/// and prefixes its message with the stage name.
class StageError : public Error {
public:
    StageError(std::string stage, const Error& cause);
    const std::string& stage() const noexcept { return stage_; }
    ExitCode exit_code() const noexcept override { return code_; }

private:
    std::string stage_;
    ExitCode code_;
};

// Stages.  Each reads the artifacts of earlier stages from the run
// directory, so they can be rerun one at a time.
void stage_ingest(const PipelineConfig& config, const RunPaths& run);
void stage_alt_train(const PipelineConfig& config, const RunPaths& run);
void stage_alt_infer(const PipelineConfig& config, const RunPaths& run);
void stage_communities(const PipelineConfig& config, const RunPaths& run);
/// Annotation, distillation, fusion and label allocation.  Returns the
/// gateway counter.
std::uint64_t stage_annotate(const PipelineConfig& config, const RunPaths& run);
void stage_evaluate(const PipelineConfig& config, const RunPaths& run);

/// Writes the synthetic benchmark's graph, embeddings and truth to `dir`.
void write_synthetic(const eval::SyntheticSpec& spec, const std::filesystem::path& dir);

struct StageTiming {
    std::string stage;
    double seconds = 0.0;
};

/// All stages in order, then run_manifest.json.  Stage failures surface as
/// StageError; artifacts of finished stages stay on disk.
std::vector<StageTiming> run_pipeline(PipelineConfig config);

void write_manifest(PipelineConfig& config, const RunPaths& run, const std::vector<StageTiming>& timings);

/// Human-readable summary of a run directory.
void print_report(const std::filesystem::path& dir, std::ostream& out, bool json);

} // namespace oga::pipeline
