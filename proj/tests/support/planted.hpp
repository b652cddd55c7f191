#pragma once

// Synthetic corpus built from planted factors: every batch matrix is
// exactly W0 * H0 in integers. A document mixes a primary topic (weight
// 4) with a cycling secondary topic (weight 1), scaled by a seeded
// per-document strength; each topic owns a 20-term block with a fixed
// integer profile. The stable term is generated from topic (k-1)'s
// factor in every batch, so its posterior is constant by construction.
// The drift term is generated from a different host topic per batch with
// 1-3-9-27 escalating coefficients, so its cumulative posterior mass
// migrates from the start topic to the end topic across windows.
// Fully seeded and deterministic.

#include <cstdint>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "topicdiff/corpus.hpp"

namespace planted {

struct PlantedCorpus {
    std::vector<topicdiff::Document> docs;
    topicdiff::Dictionary dict;
    topicdiff::WindowPlan plan;
    std::string drift_term = "driftterm";
    std::string stable_term = "stableterm";
    int topics = 0;
};

inline PlantedCorpus make_corpus(std::uint64_t seed, int topics = 5, int terms_per_topic = 20,
                                 int docs_per_batch = 100, int batches = 4) {
    PlantedCorpus corpus;
    corpus.topics = topics;

    std::vector<std::string> terms;
    for (int z = 0; z < topics; ++z)
        for (int j = 0; j < terms_per_topic; ++j)
            terms.push_back("t" + std::to_string(z) + "term" + std::to_string(j));
    terms.push_back(corpus.drift_term);
    terms.push_back(corpus.stable_term);
    corpus.dict = topicdiff::Dictionary(terms);

    std::vector<std::string> boundaries;
    for (int b = 0; b < batches; ++b)
        boundaries.push_back(std::to_string(2010 + b) + "-12-31");
    corpus.plan = topicdiff::WindowPlan::from_dates(boundaries);

    // Drift hosts: topic 0, then 2, then 3, then topic 1 to stay.
    const std::vector<int> drift_schedule = {0, 2, 3, 1};
    std::vector<int> drift_topic;
    std::vector<std::int64_t> drift_count;
    for (int b = 0; b < batches; ++b) {
        drift_topic.push_back(drift_schedule[static_cast<std::size_t>(b) % drift_schedule.size()] %
                              topics);
        std::int64_t count = 1;
        for (int e = 0; e < std::min(b, 3); ++e) count *= 3;
        drift_count.push_back(count);
    }
    const int stable_topic = topics - 1;
    const auto profile = [](int j) { return 1 + (j * 7) % 5; };

    std::mt19937_64 rng(seed);
    for (int b = 0; b < batches; ++b) {
        const std::string date = std::to_string(2010 + b) + "-06-15";
        for (int i = 0; i < docs_per_batch; ++i) {
            const int primary = i % topics;
            const int secondary = (primary + 1 + (i / topics) % (topics - 1)) % topics;
            const std::int64_t strength = 1 + static_cast<std::int64_t>(rng() % 3);

            // W0 row: strength * (4 * e_primary + e_secondary).
            const auto topic_weight = [&](int z) -> std::int64_t {
                return (z == primary ? 4 * strength : 0) + (z == secondary ? strength : 0);
            };

            topicdiff::TermCounts counts;
            for (const int z : {primary, secondary}) {
                const std::int64_t w = topic_weight(z);
                for (int j = 0; j < terms_per_topic; ++j)
                    counts["t" + std::to_string(z) + "term" + std::to_string(j)] +=
                        w * profile(j);
            }
            const std::int64_t w_drift =
                topic_weight(drift_topic[static_cast<std::size_t>(b)]) *
                drift_count[static_cast<std::size_t>(b)];
            if (w_drift > 0) counts[corpus.drift_term] = w_drift;
            const std::int64_t w_stable = topic_weight(stable_topic) * 2;
            if (w_stable > 0) counts[corpus.stable_term] = w_stable;

            topicdiff::Document doc;
            doc.id = "b" + std::to_string(b) + "d" + std::to_string(i);
            doc.date = topicdiff::parse_date(date);
            doc.content = std::move(counts);
            corpus.docs.push_back(std::move(doc));
        }
    }
    return corpus;
}

inline void write_corpus_jsonl(const std::filesystem::path& path,
                               const std::vector<topicdiff::Document>& docs) {
    std::ofstream out(path, std::ios::binary);
    for (const auto& doc : docs) {
        nlohmann::json counts = nlohmann::json::object();
        for (const auto& [term, n] : doc.counts()) counts[term] = n;
        const nlohmann::json record{{"id", doc.id},
                                    {"date", topicdiff::format_date(doc.date)},
                                    {"counts", std::move(counts)}};
        out << record.dump() << "\n";
    }
}

inline void write_dictionary(const std::filesystem::path& path, const topicdiff::Dictionary& dict) {
    std::ofstream out(path, std::ios::binary);
    for (const auto& term : dict.terms()) out << term << "\n";
}

}  // namespace planted
