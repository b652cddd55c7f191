#pragma once

// End-to-end run: window matrices -> normalized nsNMF -> aligned topics
// -> per-term posteriors -> prefix-cumulative D_GJS against the
// significance threshold -> broad/narrow x convergent/divergent labels.

#include <algorithm>
#include <future>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "topicdiff/alignment.hpp"
#include "topicdiff/corpus.hpp"
#include "topicdiff/divergence.hpp"
#include "topicdiff/factorization.hpp"
#include "topicdiff/posterior.hpp"

namespace topicdiff {

struct RunConfig {
    FitOptions fit;
    double alpha = 0.01;
    double epsilon = 1e-6;
    WindowPlan plan;
    Weighting weighting = Weighting::TfIdf;
    int broadness_min_topics = 3;
    int top_terms_count = 10;

    void validate() const {
        fit.validate();
        plan.validate();
        AssociationConfig{epsilon}.validate();
        if (!(alpha > 0.0 && alpha < 1.0))
            throw std::invalid_argument("RunConfig: alpha must lie in (0,1)");
        if (broadness_min_topics < 1)
            throw std::invalid_argument("RunConfig: broadness_min_topics must be >= 1");
        if (top_terms_count < 1)
            throw std::invalid_argument("RunConfig: top_terms_count must be >= 1");
    }

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

struct DiffusionRecord {
    int prefix_m = 0;  // number of windows in the prefix, 2..t
    double gjs_value = 0.0;
    double threshold = 0.0;
    bool significant = false;  // gjs_value strictly above threshold
};

struct DiffusionSeries {
    int term = -1;
    std::vector<DiffusionRecord> records;
    int supported_windows = 0;
};

enum class Broadness { Broad, Narrow };
enum class Convergence { Convergent, Divergent };

struct TermClassification {
    int term = -1;
    Broadness broadness = Broadness::Narrow;
    Convergence convergence = Convergence::Convergent;
};

struct ExcludedTerm {
    int term = -1;
    std::string reason;
};

struct WindowResult {
    std::string label;
    NormalizedModel model;  // aligned
    TopicPrior prior;
    std::vector<TermPosterior> posteriors;  // one per dictionary term
    int documents = 0;
    int iterations_run = 0;
    double reconstruction_error = 0.0;
};

struct RunResult {
    std::vector<WindowResult> windows;
    std::vector<AlignmentStep> alignment;
    std::vector<DiffusionSeries> series;  // terms supported in every window
    std::vector<TermClassification> classifications;
    std::vector<ExcludedTerm> excluded;
};

// Prefix-cumulative divergence: for each m in 2..t, the equal-weight GJS
// of the first m posteriors with k-ary entropy, against the threshold for
// (k, m, alpha). Significance is a strict comparison.
inline DiffusionSeries term_diffusion(std::span<const TermPosterior> posteriors, int k,
                                      double alpha) {
    if (posteriors.size() < 2)
        throw std::invalid_argument("term_diffusion: at least 2 posteriors required");
    for (const auto& p : posteriors)
        if (!p.supported)
            throw std::invalid_argument("term_diffusion: unsupported posterior in sequence");

    DiffusionSeries series;
    series.term = posteriors.front().term;
    series.supported_windows = static_cast<int>(posteriors.size());

    std::vector<ProbDist> dists;
    dists.reserve(posteriors.size());
    for (const auto& p : posteriors) dists.push_back(p.dist);

    for (int m = 2; m <= static_cast<int>(dists.size()); ++m) {
        DiffusionRecord record;
        record.prefix_m = m;
        record.gjs_value = gjs(std::span<const ProbDist>(dists.data(), m), k).value;
        record.threshold = gjs_threshold(ThresholdParams{k, m, alpha});
        record.significant = record.gjs_value > record.threshold;
        series.records.push_back(record);
    }
    return series;
}

// Broad iff the mean per-window count of topics holding posterior mass
// above epsilon reaches the cutoff; divergent iff the final prefix is
// significant (intermediate significances are reported, not decisive).
inline TermClassification classify(const DiffusionSeries& series,
                                   std::span<const TermPosterior> posteriors,
                                   const RunConfig& config) {
    if (series.records.empty()) throw std::invalid_argument("classify: series has no records");

    double mean_topics = 0.0;
    for (const auto& p : posteriors) {
        int above = 0;
        for (double q : p.dist)
            if (q > config.epsilon) ++above;
        mean_topics += above;
    }
    mean_topics /= static_cast<double>(posteriors.size());

    TermClassification cls;
    cls.term = series.term;
    cls.broadness =
        mean_topics >= config.broadness_min_topics ? Broadness::Broad : Broadness::Narrow;
    cls.convergence =
        series.records.back().significant ? Convergence::Divergent : Convergence::Convergent;
    return cls;
}

struct RankedTerm {
    int term = -1;
    double weight = 0.0;
};

// Terms with the largest H_hat mass for one topic, descending, ties by
// dictionary order. Only terms with strictly positive weight appear.
inline std::vector<RankedTerm> top_terms(const NormalizedModel& model, int topic, int n) {
    if (topic < 0 || topic >= model.H_hat.rows())
        throw std::invalid_argument("top_terms: topic index out of range");
    std::vector<RankedTerm> ranked;
    for (int i = 0; i < model.H_hat.cols(); ++i) {
        const double weight = model.H_hat(topic, i);
        if (weight > 0.0) ranked.push_back(RankedTerm{i, weight});
    }
    std::sort(ranked.begin(), ranked.end(), [](const RankedTerm& a, const RankedTerm& b) {
        if (a.weight != b.weight) return a.weight > b.weight;
        return a.term < b.term;
    });
    if (static_cast<int>(ranked.size()) > n) ranked.resize(static_cast<std::size_t>(n));
    return ranked;
}

namespace detail {

template <typename F>
auto with_stage(const std::string& stage, F&& f) {
    try {
        return f();
    } catch (const std::exception& e) {
        throw std::runtime_error(stage + ": " + e.what());
    }
}

}  // namespace detail

// Whole pipeline for one corpus. Window fits are independent and run on
// up to `threads` workers (0 = hardware concurrency); everything after
// the fits is sequential, so results do not depend on the thread count.
inline RunResult run(std::span<const Document> docs, const Dictionary& dict,
                     const RunConfig& config, unsigned threads = 1) {
    config.validate();
    if (dict.size() == 0) throw std::invalid_argument("run: empty dictionary");
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());

    const std::vector<Window> windows = detail::with_stage(
        "corpus", [&] { return cumulative_windows(docs, config.plan); });
    const int t = static_cast<int>(windows.size());
    const int k = config.fit.k;

    struct Fitted {
        NormalizedModel normalized;
        int iterations = 0;
        double error = 0.0;
    };
    const auto fit_window = [&](const Window& window) {
        return detail::with_stage("window '" + window.label + "'", [&] {
            const DocTermMatrix x = build_matrix(window.docs, dict, config.weighting, window.label);
            const FactorModel model = fit(x, config.fit);
            Fitted fitted;
            fitted.normalized = normalize(model);
            fitted.iterations = model.iterations_run;
            fitted.error = reconstruction_error(model, x);
            return fitted;
        });
    };

    std::vector<Fitted> fits(windows.size());
    if (threads <= 1 || windows.size() <= 1) {
        for (std::size_t m = 0; m < windows.size(); ++m) fits[m] = fit_window(windows[m]);
    } else {
        std::vector<std::future<Fitted>> futures(windows.size());
        std::size_t next = 0;
        while (next < windows.size()) {
            const std::size_t batch = std::min<std::size_t>(threads, windows.size() - next);
            for (std::size_t i = 0; i < batch; ++i)
                futures[next + i] = std::async(std::launch::async, fit_window,
                                               std::cref(windows[next + i]));
            for (std::size_t i = 0; i < batch; ++i) fits[next + i] = futures[next + i].get();
            next += batch;
        }
    }

    std::vector<NormalizedModel> normalized;
    std::vector<std::string> labels;
    for (std::size_t m = 0; m < windows.size(); ++m) {
        normalized.push_back(std::move(fits[m].normalized));
        labels.push_back(windows[m].label);
    }
    AlignedChain chain =
        detail::with_stage("alignment", [&] { return align_chain(normalized, labels); });

    RunResult result;
    result.alignment = std::move(chain.steps);
    const AssociationConfig assoc{config.epsilon};
    for (std::size_t m = 0; m < windows.size(); ++m) {
        WindowResult window;
        window.label = windows[m].label;
        window.model = std::move(chain.models[m]);
        window.documents = static_cast<int>(windows[m].docs.size());
        window.iterations_run = fits[m].iterations;
        window.reconstruction_error = fits[m].error;
        window.prior = detail::with_stage("posterior window '" + window.label + "'", [&] {
            return topic_prior(window.model.W, assoc);
        });
        window.posteriors.reserve(static_cast<std::size_t>(dict.size()));
        for (int term = 0; term < dict.size(); ++term) {
            TermPosterior posterior = term_posterior(window.model.H_hat, window.prior, term, assoc);
            posterior.window_label = window.label;
            window.posteriors.push_back(std::move(posterior));
        }
        result.windows.push_back(std::move(window));
    }

    for (int term = 0; term < dict.size(); ++term) {
        std::vector<TermPosterior> sequence;
        sequence.reserve(static_cast<std::size_t>(t));
        bool supported_everywhere = true;
        for (const auto& window : result.windows) {
            const TermPosterior& p = window.posteriors[static_cast<std::size_t>(term)];
            if (!p.supported) {
                supported_everywhere = false;
                break;
            }
            sequence.push_back(p);
        }
        if (!supported_everywhere) {
            result.excluded.push_back(ExcludedTerm{term, "insufficient support"});
            continue;
        }
        DiffusionSeries series = term_diffusion(sequence, k, config.alpha);
        result.classifications.push_back(classify(series, sequence, config));
        result.series.push_back(std::move(series));
    }
    return result;
}

}  // namespace topicdiff
