#include <httplib.h>
#include <json.hpp>

#include <cstdlib>

#include "oga/error.hpp"
#include "oga/llm.hpp"

namespace oga::llm {

using nlohmann::json;

std::string_view mode_name(Mode mode) { return mode == Mode::http ? "http" : "mock"; }

Mode parse_mode(std::string_view text) {
    if (text == "mock") return Mode::mock;
    if (text == "http") return Mode::http;
    throw ConfigError("llm mode must be `mock` or `http`, got `" + std::string(text) + "`");
}

void BackendConfig::apply_environment() {
    if (const char* v = std::getenv("OGA_LLM_ENDPOINT"); v && *v) endpoint = v;
    if (const char* v = std::getenv("OGA_LLM_API_KEY"); v && *v) api_key = v;
    if (const char* v = std::getenv("OGA_LLM_MODEL"); v && *v) model = v;
}

void BackendConfig::validate() const {
    if (!(timeout_seconds > 0.0)) throw ConfigError("llm timeout must be > 0 seconds");
    if (max_retries < 0) throw ConfigError("llm max_retries must be >= 0");
    if (max_inflight < 1) throw ConfigError("llm max_inflight must be >= 1");
    if (mode == Mode::http) {
        if (endpoint.empty()) throw ConfigError("http mode needs an endpoint (set OGA_LLM_ENDPOINT)");
        if (api_key.empty()) throw ConfigError("http mode needs a credential (set OGA_LLM_API_KEY)");
        if (endpoint.rfind("http://", 0) != 0 && endpoint.rfind("https://", 0) != 0)
            throw ConfigError("llm endpoint must start with http:// or https://");
    }
}

HttpBackend::HttpBackend(BackendConfig config) : config_(std::move(config)) {
    config_.validate();
    const auto scheme_end = config_.endpoint.find("://") + 3;
    const auto slash = config_.endpoint.find('/', scheme_end);
    base_ = config_.endpoint.substr(0, slash);
    path_ = slash == std::string::npos ? "/" : config_.endpoint.substr(slash);
}

std::string HttpBackend::request_body(const std::string& model, const std::string& prompt) {
    json body = {{"model", model}, {"messages", json::array({{{"role", "user"}, {"content", prompt}}})}};
    return body.dump();
}

std::string HttpBackend::completion_text(std::string_view body) {
    json doc;
    try {
        doc = json::parse(body);
    } catch (const json::exception&) {
        throw ParseError("LLM response is not JSON", std::string(body));
    }
    const auto choices = doc.find("choices");
    if (choices == doc.end() || !choices->is_array() || choices->empty())
        throw ParseError("LLM response has no choices", std::string(body));
    const auto& first = (*choices)[0];
    if (first.contains("message") && first["message"].contains("content") &&
        first["message"]["content"].is_string())
        return first["message"]["content"].get<std::string>();
    if (first.contains("text") && first["text"].is_string()) return first["text"].get<std::string>();
    throw ParseError("LLM response choice has no text content", std::string(body));
}

std::string HttpBackend::complete(const Request&, const std::string& prompt) {
    httplib::Client client(base_);
    const auto secs = static_cast<time_t>(config_.timeout_seconds);
    const auto usecs = static_cast<time_t>((config_.timeout_seconds - static_cast<double>(secs)) * 1e6);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
    httplib::Headers headers = {{"Authorization", "Bearer " + config_.api_key}};
    auto res = client.Post(path_, headers, request_body(config_.model, prompt), "application/json");
    if (!res) throw TransportError("LLM request failed: " + httplib::to_string(res.error()), 1);
    if (res->status != 200)
        throw TransportError("LLM endpoint answered HTTP " + std::to_string(res->status), 1);
    return completion_text(res->body);
}

} // namespace oga::llm
