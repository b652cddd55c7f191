#pragma once

// Serialization of models, configs, and the report files a run emits.
// Everything here is deterministic: JSON keys are sorted, doubles use
// shortest round-trip formatting, and row order is fixed, so rerunning
// with the same inputs reproduces every output byte.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "topicdiff/pipeline.hpp"
#include "topicdiff/version.hpp"

namespace topicdiff {

inline std::string format_double(double value) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

inline std::string csv_field(std::string_view field) {
    if (field.find_first_of(",\"\n") == std::string_view::npos) return std::string(field);
    std::string quoted = "\"";
    for (char c : field) {
        if (c == '"') quoted += '"';
        quoted += c;
    }
    quoted += '"';
    return quoted;
}

inline std::string weighting_to_string(Weighting w) {
    return w == Weighting::Raw ? "raw" : "tfidf";
}

inline Weighting weighting_from_string(const std::string& s) {
    if (s == "raw") return Weighting::Raw;
    if (s == "tfidf") return Weighting::TfIdf;
    throw std::invalid_argument("unknown weighting '" + s + "' (expected raw or tfidf)");
}

inline std::string broadness_to_string(Broadness b) {
    return b == Broadness::Broad ? "broad" : "narrow";
}

inline std::string convergence_to_string(Convergence c) {
    return c == Convergence::Divergent ? "divergent" : "convergent";
}

inline nlohmann::json fit_options_to_json(const FitOptions& opts) {
    return nlohmann::json{{"k", opts.k},
                          {"theta", opts.theta},
                          {"max_iter", opts.max_iter},
                          {"rel_tol", opts.rel_tol},
                          {"seed", opts.seed}};
}

inline FitOptions fit_options_from_json(const nlohmann::json& j) {
    FitOptions opts;
    opts.k = j.value("k", opts.k);
    opts.theta = j.value("theta", opts.theta);
    opts.max_iter = j.value("max_iter", opts.max_iter);
    opts.rel_tol = j.value("rel_tol", opts.rel_tol);
    opts.seed = j.value("seed", opts.seed);
    return opts;
}

inline nlohmann::json run_config_to_json(const RunConfig& config) {
    nlohmann::json j = fit_options_to_json(config.fit);
    j["alpha"] = config.alpha;
    j["epsilon"] = config.epsilon;
    std::vector<std::string> windows;
    for (const auto& b : config.plan.boundaries) windows.push_back(format_date(b));
    j["windows"] = windows;
    j["window_labels"] = config.plan.labels;
    j["weighting"] = weighting_to_string(config.weighting);
    j["broadness_min_topics"] = config.broadness_min_topics;
    j["top_terms"] = config.top_terms_count;
    return j;
}

inline RunConfig run_config_from_json(const nlohmann::json& j) {
    RunConfig config;
    config.fit = fit_options_from_json(j);
    config.alpha = j.value("alpha", config.alpha);
    config.epsilon = j.value("epsilon", config.epsilon);
    if (j.contains("windows")) {
        const auto dates = j.at("windows").get<std::vector<std::string>>();
        config.plan = WindowPlan::from_dates(dates);
        if (j.contains("window_labels")) {
            const auto labels = j.at("window_labels").get<std::vector<std::string>>();
            if (labels.size() != config.plan.labels.size())
                throw std::invalid_argument("window_labels must match windows in length");
            config.plan.labels = labels;
        }
    }
    config.weighting = weighting_from_string(j.value("weighting", std::string("tfidf")));
    config.broadness_min_topics = j.value("broadness_min_topics", config.broadness_min_topics);
    config.top_terms_count = j.value("top_terms", config.top_terms_count);
    return config;
}

inline nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw std::invalid_argument("matrix payload must be an array of rows");
    const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
    if (rows == 0) return Eigen::MatrixXd(0, 0);
    const Eigen::Index cols = static_cast<Eigen::Index>(j.at(0).size());
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = j.at(static_cast<std::size_t>(r));
        if (static_cast<Eigen::Index>(row.size()) != cols)
            throw std::invalid_argument("matrix payload rows differ in length");
        for (Eigen::Index c = 0; c < cols; ++c)
            m(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
    }
    return m;
}

inline nlohmann::json model_to_json(const NormalizedModel& model, const std::string& label) {
    return nlohmann::json{{"label", label},
                          {"n", model.W.rows()},
                          {"p", model.H_hat.cols()},
                          {"k", model.H_hat.rows()},
                          {"options", fit_options_to_json(model.options)},
                          {"empty_topics", model.empty_topics},
                          {"W", matrix_to_json(model.W)},
                          {"S_hat", matrix_to_json(model.S_hat)},
                          {"H_hat", matrix_to_json(model.H_hat)}};
}

inline NormalizedModel model_from_json(const nlohmann::json& j) {
    NormalizedModel model;
    model.options = fit_options_from_json(j.at("options"));
    model.empty_topics = j.at("empty_topics").get<std::vector<int>>();
    model.W = matrix_from_json(j.at("W"));
    model.S_hat = matrix_from_json(j.at("S_hat"));
    model.H_hat = matrix_from_json(j.at("H_hat"));
    if (model.W.rows() != j.at("n").get<Eigen::Index>() ||
        model.H_hat.cols() != j.at("p").get<Eigen::Index>() ||
        model.H_hat.rows() != j.at("k").get<Eigen::Index>())
        throw std::invalid_argument("model payload dimensions do not match header");
    return model;
}

inline nlohmann::json models_to_json(const RunResult& result, const Dictionary& dict) {
    nlohmann::json windows = nlohmann::json::array();
    for (const auto& window : result.windows)
        windows.push_back(model_to_json(window.model, window.label));
    return nlohmann::json{{"artifact_version", kVersion},
                          {"dictionary", dict.terms()},
                          {"windows", std::move(windows)}};
}

inline nlohmann::json alignment_to_json(const std::vector<AlignmentStep>& steps) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& step : steps)
        arr.push_back(nlohmann::json{{"earlier_window", step.earlier_window},
                                     {"later_window", step.later_window},
                                     {"permutation", step.permutation},
                                     {"total_cost", step.total_cost}});
    return arr;
}

namespace detail {

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace detail

// Writes diffusion.csv, posteriors.csv, top_terms.csv, alignment.json,
// run_manifest.json, and models.json under out_dir. `extra_manifest`
// lets the caller record invocation details (paths, thread cap) next to
// the run config.
inline void emit_reports(const RunResult& result, const Dictionary& dict, const RunConfig& config,
                         const std::filesystem::path& out_dir,
                         const nlohmann::json& extra_manifest = nlohmann::json::object()) {
    std::filesystem::create_directories(out_dir);

    // diffusion.csv: one row per (term, prefix); classification repeats
    // on each of the term's rows.
    {
        std::string csv = "term,prefix_m,gjs,threshold,significant,broadness,convergence\n";
        for (std::size_t i = 0; i < result.series.size(); ++i) {
            const DiffusionSeries& series = result.series[i];
            const TermClassification& cls = result.classifications[i];
            const std::string term = csv_field(dict.term(series.term));
            for (const DiffusionRecord& rec : series.records) {
                csv += term;
                csv += ',' + std::to_string(rec.prefix_m);
                csv += ',' + format_double(rec.gjs_value);
                csv += ',' + format_double(rec.threshold);
                csv += rec.significant ? ",true" : ",false";
                csv += ',' + broadness_to_string(cls.broadness);
                csv += ',' + convergence_to_string(cls.convergence);
                csv += '\n';
            }
        }
        detail::write_text_file(out_dir / "diffusion.csv", csv);
    }

    // posteriors.csv: the tile-plot data, every supported posterior.
    {
        std::string csv = "term,window_label,topic_index,probability\n";
        for (int term = 0; term < dict.size(); ++term) {
            const std::string field = csv_field(dict.term(term));
            for (const auto& window : result.windows) {
                const TermPosterior& p = window.posteriors[static_cast<std::size_t>(term)];
                if (!p.supported) continue;
                for (std::size_t topic = 0; topic < p.dist.size(); ++topic) {
                    csv += field;
                    csv += ',' + csv_field(window.label);
                    csv += ',' + std::to_string(topic);
                    csv += ',' + format_double(p.dist[topic]);
                    csv += '\n';
                }
            }
        }
        detail::write_text_file(out_dir / "posteriors.csv", csv);
    }

    // top_terms.csv: per window and topic, ranked H_hat weights.
    {
        std::string csv = "window_label,topic_index,rank,term,weight\n";
        for (const auto& window : result.windows) {
            const int k = static_cast<int>(window.model.H_hat.rows());
            for (int topic = 0; topic < k; ++topic) {
                const auto ranked = top_terms(window.model, topic, config.top_terms_count);
                for (std::size_t rank = 0; rank < ranked.size(); ++rank) {
                    csv += csv_field(window.label);
                    csv += ',' + std::to_string(topic);
                    csv += ',' + std::to_string(rank + 1);
                    csv += ',' + csv_field(dict.term(ranked[rank].term));
                    csv += ',' + format_double(ranked[rank].weight);
                    csv += '\n';
                }
            }
        }
        detail::write_text_file(out_dir / "top_terms.csv", csv);
    }

    detail::write_text_file(out_dir / "alignment.json",
                            alignment_to_json(result.alignment).dump(2) + "\n");

    {
        nlohmann::json windows = nlohmann::json::array();
        for (const auto& window : result.windows)
            windows.push_back(nlohmann::json{{"label", window.label},
                                             {"documents", window.documents},
                                             {"iterations", window.iterations_run},
                                             {"reconstruction_error", window.reconstruction_error},
                                             {"empty_topics", window.model.empty_topics}});
        nlohmann::json excluded = nlohmann::json::array();
        for (const auto& ex : result.excluded)
            excluded.push_back(
                nlohmann::json{{"term", dict.term(ex.term)}, {"reason", ex.reason}});
        nlohmann::json manifest{{"artifact_version", kVersion},
                                {"config", run_config_to_json(config)},
                                {"windows", std::move(windows)},
                                {"excluded_terms", std::move(excluded)}};
        if (!extra_manifest.empty()) manifest["invocation"] = extra_manifest;
        detail::write_text_file(out_dir / "run_manifest.json", manifest.dump(2) + "\n");
    }

    detail::write_text_file(out_dir / "models.json",
                            models_to_json(result, dict).dump(2) + "\n");
}

}  // namespace topicdiff
