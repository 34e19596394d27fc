#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "oga/error.hpp"
#include "oga/pipeline.hpp"

#include <json.hpp>

namespace oga::pipeline {

using nlohmann::json;

namespace {

std::string show(double v, int digits = 4) {
    if (std::isnan(v)) return "n/a";
    std::ostringstream s;
    s << std::fixed << std::setprecision(digits) << v;
    return s.str();
}

std::string percent(double v) { return std::isnan(v) ? "n/a" : show(100.0 * v, 1) + "%"; }

} // namespace

void print_report(const std::filesystem::path& dir, std::ostream& out, bool as_json) {
    const RunPaths run{dir};
    if (!std::filesystem::exists(run.metrics()))
        throw DataError("missing " + run.metrics().string() + " (run the evaluate stage; it needs ground truth)");
    const auto r = eval::read_metrics_json(run.metrics());

    if (as_json) {
        std::ifstream in(run.metrics(), std::ios::binary);
        out << in.rdbuf();
        return;
    }

    out << "run " << dir.string() << "\n";
    if (std::filesystem::exists(run.manifest())) {
        std::ifstream in(run.manifest(), std::ios::binary);
        try {
            const auto m = json::parse(in);
            out << "version " << m.at("version").get<std::string>() << ", seed " << m.at("seeds").at("seed")
                << ", synth_seed " << m.at("seeds").at("synth_seed") << "\n";
        } catch (const json::exception& e) {
            throw FormatError(run.manifest().string() + ": " + e.what());
        }
    }
    out << "\n"
        << "Aspect 1  known-class accuracy  " << percent(r.accuracy) << "\n"
        << "Aspect 2  coverage              " << percent(r.coverage) << "\n"
        << "          precision             " << percent(r.precision)
        << (r.nothing_rejected ? "  (nothing rejected)" : "") << "\n"
        << "Aspect 3  K-K                   " << show(r.quality.k_to_k)
        << (r.quality.single_known ? "  (single known class)" : "") << "\n"
        << "          K-G                   " << show(r.quality.k_to_g) << "\n"
        << "          G-U                   " << show(r.quality.g_to_u) << "\n"
        << "Aspect 4  lower                 " << percent(r.backbone.lower) << "\n"
        << "          ours                  " << percent(r.backbone.ours) << "\n"
        << "          upper                 " << percent(r.backbone.upper) << "\n"
        << "\n"
        << "LLM calls  pure " << r.llm_calls.pure << ", actual " << r.llm_calls.actual << ", reduction "
        << percent(r.llm_calls.reduction) << "\n";
}

} // namespace oga::pipeline
