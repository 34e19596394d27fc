#include <openssl/evp.h>

#include <algorithm>
#include <fstream>
#include <optional>
#include <sstream>
#include <thread>

#include "oga/error.hpp"
#include "oga/llm.hpp"

namespace oga::llm {

namespace {

class SlotGuard {
public:
    SlotGuard(std::mutex& m, std::condition_variable& cv, int& free) : m_(m), cv_(cv), free_(free) {
        std::unique_lock lock(m_);
        cv_.wait(lock, [&] { return free_ > 0; });
        --free_;
    }
    ~SlotGuard() {
        {
            std::lock_guard lock(m_);
            ++free_;
        }
        cv_.notify_one();
    }

private:
    std::mutex& m_;
    std::condition_variable& cv_;
    int& free_;
};

std::optional<std::string> read_disk(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_disk(const std::filesystem::path& dir, const std::string& key, const std::string& raw) {
    std::filesystem::create_directories(dir);
    const auto tmp = dir / (key + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw DataError("cannot write LLM cache file in " + dir.string());
        out << raw;
    }
    std::filesystem::rename(tmp, dir / (key + ".txt"));
}

} // namespace

Gateway::Gateway(BackendConfig config, std::unique_ptr<Backend> backend)
    : config_(std::move(config)), backend_(std::move(backend)), free_slots_(config_.max_inflight) {
    config_.validate();
    if (!backend_) {
        if (config_.mode == Mode::http) backend_ = std::make_unique<HttpBackend>(config_);
        else backend_ = std::make_unique<MockBackend>();
    }
}

Gateway::~Gateway() = default;

std::string Gateway::cache_key(Kind kind, const std::string& prompt) {
    std::string material(kind_name(kind));
    material.push_back('\0');
    material += prompt;
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(material.data(), material.size(), digest, &len, EVP_sha256(), nullptr);
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 15];
    }
    return out;
}

std::string Gateway::send_with_retries(const Request& request, const std::string& prompt) {
    const int attempts = config_.max_retries + 1;
    std::string last;
    for (int attempt = 1; attempt <= attempts; ++attempt) {
        try {
            std::string raw;
            {
                SlotGuard slot(slot_mutex_, slot_cv_, free_slots_);
                ++attempts_;
                raw = backend_->complete(request, prompt);
            }
            parse_labels(raw);
            return raw;
        } catch (const ParseError& e) {
            if (attempt == attempts) throw;
            last = e.what();
        } catch (const TransportError& e) {
            last = e.what();
        }
    }
    throw TransportError(last + " (gave up after " + std::to_string(attempts) + " attempts)", attempts);
}

std::vector<std::string> Gateway::dispatch(const Request& request, const std::string& prompt,
                                           const std::string& key) {
    if (config_.cache_enabled && !config_.cache_dir.empty()) {
        if (auto raw = read_disk(config_.cache_dir / (key + ".txt"))) {
            try {
                auto labels = parse_labels(*raw);
                ++cache_hits_;
                return labels;
            } catch (const ParseError&) {
                // Corrupt entry: fall through and overwrite it.
            }
        }
    }
    const std::string raw = send_with_retries(request, prompt);
    auto labels = parse_labels(raw);
    if (config_.cache_enabled && !config_.cache_dir.empty()) write_disk(config_.cache_dir, key, raw);
    std::lock_guard lock(mutex_);
    switch (request.kind) {
    case Kind::annotate: ++counts_.annotate; break;
    case Kind::distill: ++counts_.distill; break;
    case Kind::fuse: ++counts_.fuse; break;
    }
    return labels;
}

std::vector<std::string> Gateway::call(const Request& request) {
    const std::string prompt = render_prompt(request);
    const std::string key = cache_key(request.kind, prompt);
    if (!config_.cache_enabled) return dispatch(request, prompt, key);

    std::promise<std::vector<std::string>> promise;
    {
        std::unique_lock lock(mutex_);
        if (auto it = cache_.find(key); it != cache_.end()) {
            ++cache_hits_;
            return it->second;
        }
        if (auto it = inflight_.find(key); it != inflight_.end()) {
            auto shared = it->second;
            lock.unlock();
            ++cache_hits_;
            return shared.get();
        }
        inflight_.emplace(key, promise.get_future().share());
    }
    try {
        auto labels = dispatch(request, prompt, key);
        {
            std::lock_guard lock(mutex_);
            cache_.emplace(key, labels);
            inflight_.erase(key);
        }
        promise.set_value(labels);
        return labels;
    } catch (...) {
        {
            std::lock_guard lock(mutex_);
            inflight_.erase(key);
        }
        promise.set_exception(std::current_exception());
        throw;
    }
}

std::vector<std::vector<std::string>> Gateway::call_all(const std::vector<Request>& requests) {
    std::vector<std::vector<std::string>> out(requests.size());
    std::vector<std::exception_ptr> errors(requests.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < requests.size(); i = next++) {
            try {
                out[i] = call(requests[i]);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const auto workers = std::min<std::size_t>(static_cast<std::size_t>(config_.max_inflight), requests.size());
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

std::string Gateway::annotate(const std::string& text, const std::vector<std::string>& neighbors) {
    return call(Request::annotate(text, neighbors)).front();
}

std::string Gateway::distill(const std::vector<std::string>& labels) {
    return call(Request::distill(labels)).front();
}

std::string Gateway::fuse(const std::string& a, const std::string& b) {
    return call(Request::fuse(a, b)).front();
}

CallCounts Gateway::counts() const {
    std::lock_guard lock(mutex_);
    return counts_;
}

} // namespace oga::llm
