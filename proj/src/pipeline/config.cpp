#include <fstream>
#include <set>
#include <sstream>

#include "oga/error.hpp"
#include "oga/pipeline.hpp"

namespace oga::pipeline {

namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

void append(FieldList& out, FieldList more) {
    for (auto& f : more) out.push_back(std::move(f));
}

} // namespace

FieldList PipelineConfig::fields() {
    FieldList out = {
        {"input", &input},
        {"nodes", &nodes},
        {"edges", &edges},
        {"embeddings", &embeddings},
        {"truth", &truth},
        {"out_dir", &out_dir},
        {"embed_dim", &embed_dim},
        {"seed", &seed},
    };
    append(out, alt::fields(alt));
    append(out, gla::fields(gla));
    append(out, {
                    {"llm_mode", &llm_mode},
                    {"llm_endpoint", &llm_endpoint},
                    {"llm_model", &llm_model},
                    {"llm_timeout_seconds", &llm_timeout_seconds},
                    {"llm_max_retries", &llm_max_retries},
                    {"llm_cache", &llm_cache},
                    {"llm_cache_dir", &llm_cache_dir},
                    {"llm_max_inflight", &llm_max_inflight},
                });
    append(out, eval::fields(synth));
    append(out, {
                    {"synth_seed", &synth.seed},
                    {"backbone_hidden", &backbone.hidden},
                    {"backbone_epochs", &backbone.epochs},
                    {"backbone_learning_rate", &backbone.learning_rate},
                    {"quality_embed_dim", &quality_embed_dim},
                });
    return out;
}

void PipelineConfig::propagate_seed() {
    alt.seed = seed;
    gla.seed = seed;
    backbone.seed = seed;
}

llm::BackendConfig PipelineConfig::backend() const {
    llm::BackendConfig b;
    b.mode = llm::parse_mode(llm_mode);
    b.endpoint = llm_endpoint;
    b.model = llm_model;
    b.timeout_seconds = llm_timeout_seconds;
    b.max_retries = llm_max_retries;
    b.cache_enabled = llm_cache;
    b.cache_dir = llm_cache_dir;
    b.max_inflight = llm_max_inflight;
    b.apply_environment();
    return b;
}

void PipelineConfig::validate() {
    if (input != "synth" && input != "files") throw ConfigError("input must be `synth` or `files`, got `" + input + "`");
    if (input == "files" && (nodes.empty() || edges.empty()))
        throw ConfigError("input `files` needs the `nodes` and `edges` keys");
    if (out_dir.empty()) throw ConfigError("out_dir must not be empty");
    if (embed_dim < 2) throw ConfigError("embed_dim must be >= 2");
    if (quality_embed_dim < 2) throw ConfigError("quality_embed_dim must be >= 2");
    if (backbone.hidden < 1 || backbone.epochs < 0 || !(backbone.learning_rate > 0.0))
        throw ConfigError("backbone needs hidden >= 1, epochs >= 0 and a positive learning rate");
    propagate_seed();
    alt.validate();
    gla.validate();
    if (input == "synth") synth.validate();
    backend().validate();
}

std::string format_config(PipelineConfig& config) {
    std::string out;
    for (const auto& f : config.fields()) out += f.key + " = " + format_field(f) + "\n";
    return out;
}

PipelineConfig parse_config(std::string_view text, const std::string& origin) {
    PipelineConfig config;
    auto bindings = config.fields();
    std::set<std::string> seen;
    std::istringstream in{std::string(text)};
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line = raw;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        const std::string where = origin + ":" + std::to_string(line_no);
        if (eq == std::string_view::npos) throw ConfigError(where + ": expected `key = value`");
        const std::string key(trim(line.substr(0, eq)));
        const auto value = trim(line.substr(eq + 1));
        const auto it = std::find_if(bindings.begin(), bindings.end(), [&](const FieldRef& f) { return f.key == key; });
        if (it == bindings.end()) throw ConfigError(where + ": unknown config key `" + key + "`");
        if (!seen.insert(key).second) throw ConfigError(where + ": repeated config key `" + key + "`");
        parse_field(*it, value);
    }
    for (const auto& f : bindings)
        if (!seen.count(f.key)) throw ConfigError(origin + ": missing config key `" + f.key + "`");
    config.propagate_seed();
    return config;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str(), path.string());
}

} // namespace oga::pipeline
