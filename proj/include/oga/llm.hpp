#pragma once

// Every LLM interaction goes through Gateway: prompt rendering, backend
// dispatch (HTTP chat completion or the deterministic mock), response
// parsing, caching and call counting.

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

namespace oga::llm {

enum class Kind { annotate, distill, fuse };

std::string_view kind_name(Kind kind);

struct Request {
    Kind kind = Kind::annotate;
    std::string node_text;                   // annotate
    std::vector<std::string> neighbor_texts; // annotate
    std::vector<std::string> labels;         // distill: any count, fuse: exactly two

    static Request annotate(std::string text, std::vector<std::string> neighbors);
    static Request distill(std::vector<std::string> labels);
    static Request fuse(std::string a, std::string b);
};

/// Throws DataError when the payload is empty or malformed for its kind.
std::string render_prompt(const Request& request);

/// Parenthesised items in order, trimmed, lowercased, inner whitespace runs
/// replaced by `_`.  Throws ParseError (carrying the raw text) when none.
std::vector<std::string> parse_labels(std::string_view response);

/// The same normalisation parse_labels applies to each item.
std::string normalize_label(std::string_view text);

// ---------------------------------------------------------------------------
// Mock rules

/// Version tag of the stopword list below; bump when the list changes.
inline constexpr std::string_view kStopwordsVersion = "en50-v1";
const std::vector<std::string>& stopwords();

/// Two most frequent alphabetic tokens of length >= 4 that are not
/// stopwords, joined by `_`; ties keep the earlier first occurrence.  One
/// token alone is returned as is, none gives "misc".
std::string mock_annotate(std::string_view text);
/// Most frequent label, lexicographically smallest on ties.
std::string mock_distill(const std::vector<std::string>& labels);
/// Shorter label, lexicographically smallest on equal length.
std::string mock_fuse(const std::string& a, const std::string& b);

// ---------------------------------------------------------------------------
// Backends

enum class Mode { mock, http };

struct BackendConfig {
    Mode mode = Mode::mock;
    std::string endpoint; // full URL of the chat-completion route
    std::string api_key;
    std::string model;
    double timeout_seconds = 30.0;
    int max_retries = 2;
    bool cache_enabled = true;
    std::filesystem::path cache_dir; // empty: memory-only cache
    int max_inflight = 4;

    /// Fills endpoint, key and model from OGA_LLM_ENDPOINT, OGA_LLM_API_KEY
    /// and OGA_LLM_MODEL where set.
    void apply_environment();
    /// Throws ConfigError, e.g. http mode without endpoint or credential.
    void validate() const;
};

std::string_view mode_name(Mode mode);
Mode parse_mode(std::string_view text);

class Backend {
public:
    virtual ~Backend() = default;
    /// One attempt.  Returns the raw completion text; throws TransportError
    /// on connection failures, timeouts and non-200 answers.
    virtual std::string complete(const Request& request, const std::string& prompt) = 0;
};

/// Answers "(label)" by the mock rules; never touches the network.
class MockBackend final : public Backend {
public:
    std::string complete(const Request& request, const std::string& prompt) override;
};

/// Minimal chat-completion client; wire shape in docs/llm_wire.md.
class HttpBackend final : public Backend {
public:
    explicit HttpBackend(BackendConfig config);
    std::string complete(const Request& request, const std::string& prompt) override;

    /// Request body for a prompt, exposed for tests and docs.
    static std::string request_body(const std::string& model, const std::string& prompt);
    /// Completion text from a response body; throws ParseError.
    static std::string completion_text(std::string_view body);

private:
    BackendConfig config_;
    std::string base_; // scheme://host[:port]
    std::string path_;
};

// ---------------------------------------------------------------------------
// Gateway

struct CallCounts {
    std::uint64_t annotate = 0;
    std::uint64_t distill = 0;
    std::uint64_t fuse = 0;
    std::uint64_t total() const noexcept { return annotate + distill + fuse; }
};

class Gateway {
public:
    /// Uses MockBackend or HttpBackend according to config.mode unless a
    /// backend is supplied.
    explicit Gateway(BackendConfig config, std::unique_ptr<Backend> backend = nullptr);
    ~Gateway();
    Gateway(const Gateway&) = delete;
    Gateway& operator=(const Gateway&) = delete;

    /// Parsed labels.  A cache hit (or joining an identical request already
    /// in flight) does not count; a completed dispatch counts once.  Attempts
    /// are max_retries + 1; the last TransportError or ParseError is thrown.
    std::vector<std::string> call(const Request& request);

    /// Runs requests with at most max_inflight at once; results are in
    /// request order regardless of completion order.
    std::vector<std::vector<std::string>> call_all(const std::vector<Request>& requests);

    std::string annotate(const std::string& text, const std::vector<std::string>& neighbors);
    std::string distill(const std::vector<std::string>& labels);
    std::string fuse(const std::string& a, const std::string& b);

    CallCounts counts() const;
    std::uint64_t cache_hits() const noexcept { return cache_hits_.load(); }
    std::uint64_t attempts() const noexcept { return attempts_.load(); }
    const BackendConfig& config() const noexcept { return config_; }

    /// Hex SHA-256 of kind name, a NUL byte and the prompt.
    static std::string cache_key(Kind kind, const std::string& prompt);

private:
    std::vector<std::string> dispatch(const Request& request, const std::string& prompt,
                                      const std::string& key);
    std::string send_with_retries(const Request& request, const std::string& prompt);

    BackendConfig config_;
    std::unique_ptr<Backend> backend_;

    mutable std::mutex mutex_;
    std::map<std::string, std::vector<std::string>> cache_;
    std::map<std::string, std::shared_future<std::vector<std::string>>> inflight_;
    CallCounts counts_;
    std::atomic<std::uint64_t> cache_hits_{0};
    std::atomic<std::uint64_t> attempts_{0};

    std::mutex slot_mutex_;
    std::condition_variable slot_cv_;
    int free_slots_;
};

} // namespace oga::llm
