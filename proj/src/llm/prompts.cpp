#include <algorithm>
#include <cctype>
#include <map>
#include <unordered_map>

#include "oga/error.hpp"
#include "oga/llm.hpp"

namespace oga::llm {

std::string_view kind_name(Kind kind) {
    switch (kind) {
    case Kind::annotate: return "annotate";
    case Kind::distill: return "distill";
    case Kind::fuse: return "fuse";
    }
    return "unknown";
}

Request Request::annotate(std::string text, std::vector<std::string> neighbors) {
    Request r;
    r.kind = Kind::annotate;
    r.node_text = std::move(text);
    r.neighbor_texts = std::move(neighbors);
    return r;
}

Request Request::distill(std::vector<std::string> labels) {
    Request r;
    r.kind = Kind::distill;
    r.labels = std::move(labels);
    return r;
}

Request Request::fuse(std::string a, std::string b) {
    Request r;
    r.kind = Kind::fuse;
    r.labels = {std::move(a), std::move(b)};
    return r;
}

namespace {

// The output-format lines are kept word for word; backends that follow
// them answer in the shape parse_labels expects.
constexpr std::string_view kAnnotateFormat =
    "Return a comma-separated list of the final labels, with each label enclosed in parentheses, "
    "following the original community order. Example: (label1), (label2), (label3).";
constexpr std::string_view kDistillFormat =
    "Return a comma-separated list of the merged labels, with each label enclosed in parentheses, "
    "following the original order of the input. Example: (label1), (label2), (label3).";
constexpr std::string_view kFuseFormat =
    "The output should be a comma-separated list of merged labels, each enclosed in parentheses, "
    "in the same order as the input community-level labels. Example: (label1), (label2), (label3).";

std::string label_list(const std::vector<std::string>& labels) {
    std::string out;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (i) out += ", ";
        out += "(" + labels[i] + ")";
    }
    return out;
}

void require_labels(const Request& r, std::size_t exact) {
    if (r.labels.empty()) throw DataError(std::string(kind_name(r.kind)) + " request has no labels");
    if (exact && r.labels.size() != exact)
        throw DataError(std::string(kind_name(r.kind)) + " request needs exactly " + std::to_string(exact) +
                        " labels");
    for (const auto& l : r.labels)
        if (l.empty()) throw DataError(std::string(kind_name(r.kind)) + " request has an empty label");
}

} // namespace

std::string render_prompt(const Request& r) {
    std::string p;
    switch (r.kind) {
    case Kind::annotate:
        if (r.node_text.empty()) throw DataError("annotate request has empty node text");
        p = "Task: propose a topic label for the node described below. The label should be two or "
            "three words, specific to the node's content rather than generic. The texts of "
            "related nodes in the same graph neighbourhood are given as context.\n\n";
        p += "Node text:\n" + r.node_text + "\n\n";
        if (!r.neighbor_texts.empty()) {
            p += "Neighbour texts:\n";
            for (const auto& t : r.neighbor_texts) p += "- " + t + "\n";
            p += "\n";
        }
        p += "Output format:\n";
        p += kAnnotateFormat;
        p += "\nReturn exactly one label.\n";
        break;
    case Kind::distill:
        require_labels(r, 0);
        p = "Task: the labels below were proposed for representative nodes of one community. "
            "Condense them into a single label for the whole community, two or three words, "
            "keeping the meaning they share.\n\n";
        p += "Labels: " + label_list(r.labels) + "\n\n";
        p += "Output format:\n";
        p += kDistillFormat;
        p += "\nReturn exactly one label.\n";
        break;
    case Kind::fuse:
        require_labels(r, 2);
        p = "Task: the two community labels below belong to communities judged semantically "
            "close by the cosine similarity of their members. Merge them into one concise label "
            "that covers both communities.\n\n";
        p += "Labels: " + label_list(r.labels) + "\n\n";
        p += "Output format:\n";
        p += kFuseFormat;
        p += "\nReturn exactly one label.\n";
        break;
    }
    return p;
}

std::string normalize_label(std::string_view text) {
    std::size_t b = 0, e = text.size();
    while (b < e && std::isspace(static_cast<unsigned char>(text[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(text[e - 1]))) --e;
    std::string out;
    bool gap = false;
    for (std::size_t i = b; i < e; ++i) {
        const auto ch = static_cast<unsigned char>(text[i]);
        if (std::isspace(ch)) {
            gap = true;
            continue;
        }
        if (gap) out += '_';
        gap = false;
        out += static_cast<char>(std::tolower(ch));
    }
    return out;
}

std::vector<std::string> parse_labels(std::string_view response) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (true) {
        const auto open = response.find('(', pos);
        if (open == std::string_view::npos) break;
        const auto close = response.find(')', open + 1);
        if (close == std::string_view::npos) break;
        auto label = normalize_label(response.substr(open + 1, close - open - 1));
        if (!label.empty()) out.push_back(std::move(label));
        pos = close + 1;
    }
    if (out.empty()) throw ParseError("no parenthesised label in LLM response", std::string(response));
    return out;
}

const std::vector<std::string>& stopwords() {
    static const std::vector<std::string> words = {
        "about", "after",   "against", "also",  "because", "been",  "before", "being",  "between", "both",
        "could", "does",    "during",  "each",  "from",    "have",  "here",   "into",   "just",    "more",
        "most",  "only",    "other",   "over",  "should",  "some",  "such",   "than",   "that",    "their",
        "them",  "then",    "there",   "these", "they",    "this",  "those",  "through", "under",  "until",
        "very",  "were",    "what",    "when",  "where",   "which", "while",  "with",   "would",   "your",
    };
    return words;
}

std::string mock_annotate(std::string_view text) {
    struct Entry {
        std::size_t count = 0;
        std::size_t first = 0;
    };
    std::unordered_map<std::string, Entry> freq;
    std::vector<std::string> order;
    const auto& stop = stopwords();
    std::string token;
    auto flush = [&] {
        if (token.size() >= 4 && std::find(stop.begin(), stop.end(), token) == stop.end()) {
            auto [it, fresh] = freq.try_emplace(token, Entry{0, order.size()});
            if (fresh) order.push_back(token);
            ++it->second.count;
        }
        token.clear();
    };
    for (char ch : text) {
        const auto u = static_cast<unsigned char>(ch);
        if (u < 0x80 && std::isalpha(u)) token += static_cast<char>(std::tolower(u));
        else flush();
    }
    flush();

    std::stable_sort(order.begin(), order.end(),
                     [&](const std::string& a, const std::string& b) { return freq[a].count > freq[b].count; });
    if (order.empty()) return "misc";
    if (order.size() == 1) return order[0];
    return order[0] + "_" + order[1];
}

std::string mock_distill(const std::vector<std::string>& labels) {
    if (labels.empty()) throw DataError("distill needs at least one label");
    std::map<std::string, std::size_t> freq;
    for (const auto& l : labels) ++freq[l];
    // std::map iterates lexicographically, so strict > keeps the smallest.
    auto best = freq.begin();
    for (auto it = freq.begin(); it != freq.end(); ++it)
        if (it->second > best->second) best = it;
    return best->first;
}

std::string mock_fuse(const std::string& a, const std::string& b) {
    if (a.size() != b.size()) return a.size() < b.size() ? a : b;
    return std::min(a, b);
}

std::string MockBackend::complete(const Request& r, const std::string&) {
    switch (r.kind) {
    case Kind::annotate: return "(" + mock_annotate(r.node_text) + ")";
    case Kind::distill: return "(" + mock_distill(r.labels) + ")";
    case Kind::fuse: return "(" + mock_fuse(r.labels.at(0), r.labels.at(1)) + ")";
    }
    throw BackendError("unknown request kind");
}

} // namespace oga::llm
