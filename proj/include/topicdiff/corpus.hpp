#pragma once

// Corpus loading, dictionary-driven tokenization, and construction of
// the per-window document-term matrices the factorization consumes.

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace topicdiff {

using TermCounts = std::map<std::string, std::int64_t>;

// Calendar date with day granularity. "YYYY-MM-DD" only; the calendar is
// validated (2016-13-01 and 2015-02-29 are rejected).
inline std::chrono::sys_days parse_date(std::string_view text) {
    const auto fail = [&] {
        throw std::invalid_argument("invalid date '" + std::string(text) +
                                    "' (expected YYYY-MM-DD)");
    };
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') fail();
    int parts[3] = {0, 0, 0};
    const int spans[3][2] = {{0, 4}, {5, 2}, {8, 2}};
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < spans[i][1]; ++j) {
            const char c = text[spans[i][0] + j];
            if (!std::isdigit(static_cast<unsigned char>(c))) fail();
            parts[i] = parts[i] * 10 + (c - '0');
        }
    }
    const std::chrono::year_month_day ymd{std::chrono::year{parts[0]},
                                          std::chrono::month{static_cast<unsigned>(parts[1])},
                                          std::chrono::day{static_cast<unsigned>(parts[2])}};
    if (!ymd.ok()) fail();
    return std::chrono::sys_days{ymd};
}

inline std::string format_date(std::chrono::sys_days day) {
    const std::chrono::year_month_day ymd{day};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

struct Document {
    std::string id;
    std::chrono::sys_days date;
    // Raw text, or pre-counted dictionary-term counts.
    std::variant<std::string, TermCounts> content;

    bool has_text() const { return std::holds_alternative<std::string>(content); }
    const std::string& text() const { return std::get<std::string>(content); }
    const TermCounts& counts() const { return std::get<TermCounts>(content); }
};

// Fixed term vocabulary. Order is the column identity of every matrix in
// a run; terms may be multi-word ("latent dirichlet allocation").
class Dictionary {
public:
    Dictionary() = default;

    explicit Dictionary(std::vector<std::string> terms) : terms_(std::move(terms)) {
        for (std::size_t i = 0; i < terms_.size(); ++i) {
            const std::string& term = terms_[i];
            if (term.empty()) throw std::invalid_argument("Dictionary: empty term");
            if (!index_.emplace(term, static_cast<int>(i)).second)
                throw std::invalid_argument("Dictionary: duplicate term '" + term + "'");
            const auto words = 1 + std::count(term.begin(), term.end(), ' ');
            max_words_ = std::max<int>(max_words_, static_cast<int>(words));
        }
    }

    int size() const { return static_cast<int>(terms_.size()); }
    const std::vector<std::string>& terms() const { return terms_; }
    const std::string& term(int i) const { return terms_.at(static_cast<std::size_t>(i)); }
    int max_words() const { return max_words_; }

    std::optional<int> find(const std::string& term) const {
        const auto it = index_.find(term);
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

private:
    std::vector<std::string> terms_;
    std::unordered_map<std::string, int> index_;
    int max_words_ = 0;
};

struct DocTermMatrix {
    Eigen::MatrixXd values;            // n x p, all entries >= 0
    std::vector<std::string> doc_ids;  // length n
    std::string window_label;
};

// Ascending cutoff dates; window m holds every document dated on or
// before boundary m, so windows are cumulative.
struct WindowPlan {
    std::vector<std::chrono::sys_days> boundaries;
    std::vector<std::string> labels;

    void validate() const {
        if (boundaries.size() != labels.size())
            throw std::invalid_argument("WindowPlan: one label per boundary required");
        for (std::size_t i = 1; i < boundaries.size(); ++i)
            if (!(boundaries[i - 1] < boundaries[i]))
                throw std::invalid_argument("WindowPlan: boundaries must be strictly ascending");
    }

    static WindowPlan from_dates(const std::vector<std::string>& dates) {
        WindowPlan plan;
        for (const auto& d : dates) {
            plan.boundaries.push_back(parse_date(d));
            plan.labels.push_back(d);
        }
        plan.validate();
        return plan;
    }

    friend bool operator==(const WindowPlan&, const WindowPlan&) = default;
};

enum class CorpusFormat { JsonlText, JsonlCounts };
enum class Weighting { Raw, TfIdf };

// One JSON document per line:
//   {"id": "...", "date": "YYYY-MM-DD", "text": "..."}
//   {"id": "...", "date": "YYYY-MM-DD", "counts": {"term": n, ...}}
inline std::vector<Document> load_corpus(const std::filesystem::path& path, CorpusFormat format) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open corpus file: " + path.string());

    std::vector<Document> docs;
    std::unordered_map<std::string, int> seen_ids;  // id -> line number
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto where = [&] { return path.string() + ":" + std::to_string(line_no); };

        nlohmann::json record = nlohmann::json::parse(line, nullptr, false);
        if (record.is_discarded() || !record.is_object())
            throw std::runtime_error(where() + ": malformed JSON record");

        Document doc;
        try {
            doc.id = record.at("id").get<std::string>();
            doc.date = parse_date(record.at("date").get<std::string>());
            if (format == CorpusFormat::JsonlText) {
                doc.content = record.at("text").get<std::string>();
            } else {
                TermCounts counts;
                for (const auto& [term, value] : record.at("counts").items()) {
                    const auto n = value.get<std::int64_t>();
                    if (n < 0)
                        throw std::invalid_argument("negative count for term '" + term + "'");
                    counts.emplace(term, n);
                }
                doc.content = std::move(counts);
            }
        } catch (const std::exception& e) {
            throw std::runtime_error(where() + ": " + e.what());
        }

        const auto [it, inserted] = seen_ids.emplace(doc.id, line_no);
        if (!inserted)
            throw std::runtime_error(where() + ": duplicate document id '" + doc.id +
                                     "' (first seen at line " + std::to_string(it->second) + ")");
        docs.push_back(std::move(doc));
    }
    return docs;
}

// One lowercase term per line, words separated by single spaces. Input is
// lowercased and whitespace-normalized; duplicates are fatal.
inline Dictionary load_dictionary(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dictionary file: " + path.string());
    std::vector<std::string> terms;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string normalized;
        for (char c : line) {
            if (std::isspace(static_cast<unsigned char>(c))) {
                if (!normalized.empty() && normalized.back() != ' ') normalized += ' ';
            } else {
                normalized += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            }
        }
        while (!normalized.empty() && normalized.back() == ' ') normalized.pop_back();
        if (normalized.empty()) continue;
        terms.push_back(std::move(normalized));
    }
    try {
        return Dictionary(std::move(terms));
    } catch (const std::exception& e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
}

namespace detail {

// Lowercased whitespace tokens with surrounding ASCII punctuation trimmed.
inline std::vector<std::string> word_stream(std::string_view text) {
    std::vector<std::string> words;
    std::string current;
    const auto flush = [&] {
        std::size_t begin = 0, end = current.size();
        while (begin < end && std::ispunct(static_cast<unsigned char>(current[begin]))) ++begin;
        while (end > begin && std::ispunct(static_cast<unsigned char>(current[end - 1]))) --end;
        if (end > begin) words.push_back(current.substr(begin, end - begin));
        current.clear();
    };
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            flush();
        } else {
            current += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        }
    }
    flush();
    return words;
}

}  // namespace detail

// Greedy longest-match scan: at each word position the longest dictionary
// term (spanning up to dict.max_words() words) is consumed; words that
// start no dictionary term are dropped. Count documents pass through with
// their counts filtered to dictionary terms.
inline TermCounts tokenize(const Document& doc, const Dictionary& dict) {
    TermCounts counts;
    if (!doc.has_text()) {
        for (const auto& [term, n] : doc.counts())
            if (n > 0 && dict.find(term)) counts[term] += n;
        return counts;
    }

    const std::vector<std::string> words = detail::word_stream(doc.text());
    const std::size_t max_span = static_cast<std::size_t>(std::max(dict.max_words(), 1));
    std::size_t pos = 0;
    while (pos < words.size()) {
        const std::size_t longest = std::min(max_span, words.size() - pos);
        std::size_t consumed = 1;  // unmatched words are dropped one at a time
        for (std::size_t span = longest; span >= 1; --span) {
            std::string candidate = words[pos];
            for (std::size_t j = 1; j < span; ++j) {
                candidate += ' ';
                candidate += words[pos + j];
            }
            if (dict.find(candidate)) {
                counts[candidate] += 1;
                consumed = span;
                break;
            }
        }
        pos += consumed;
    }
    return counts;
}

// Document-term matrix over a fixed dictionary. Raw entries are term
// counts; tf-idf entries are count * ln(n / df). Terms appearing in no
// document (or in every document) produce zero columns, keeping the
// column count stable across windows.
inline DocTermMatrix build_matrix(std::span<const Document> docs, const Dictionary& dict,
                                  Weighting weighting, std::string window_label = {}) {
    if (docs.empty()) throw std::invalid_argument("build_matrix: no documents");
    const int n = static_cast<int>(docs.size());
    const int p = dict.size();

    DocTermMatrix matrix;
    matrix.values = Eigen::MatrixXd::Zero(n, p);
    matrix.doc_ids.reserve(docs.size());
    matrix.window_label = std::move(window_label);

    std::vector<int> df(p, 0);
    for (int d = 0; d < n; ++d) {
        matrix.doc_ids.push_back(docs[d].id);
        for (const auto& [term, count] : tokenize(docs[d], dict)) {
            if (count <= 0) continue;
            const int i = *dict.find(term);
            matrix.values(d, i) = static_cast<double>(count);
            ++df[i];
        }
    }

    if (weighting == Weighting::TfIdf) {
        for (int i = 0; i < p; ++i) {
            const double idf = df[i] > 0 ? std::log(static_cast<double>(n) / df[i]) : 0.0;
            matrix.values.col(i) *= idf;
        }
    }
    return matrix;
}

struct Window {
    std::string label;
    std::vector<Document> docs;
};

// Nested document subsets: window m holds every document dated on or
// before boundary m. An empty window cannot be factorized and is fatal.
inline std::vector<Window> cumulative_windows(std::span<const Document> docs,
                                              const WindowPlan& plan) {
    plan.validate();
    if (plan.boundaries.size() < 2)
        throw std::invalid_argument("cumulative_windows: at least 2 windows required");

    std::vector<Window> windows;
    windows.reserve(plan.boundaries.size());
    for (std::size_t m = 0; m < plan.boundaries.size(); ++m) {
        Window window;
        window.label = plan.labels[m];
        for (const Document& doc : docs)
            if (doc.date <= plan.boundaries[m]) window.docs.push_back(doc);
        if (window.docs.empty())
            throw std::runtime_error("window '" + window.label + "' contains no documents");
        windows.push_back(std::move(window));
    }
    return windows;
}

}  // namespace topicdiff
