#pragma once

// Bayes inversion of the normalized model: per-term distributions
// P(topic | term) built from H_hat rows and a document-association topic
// prior. "Associated" means above a strictly positive threshold epsilon,
// since multiplicative updates leave tiny residuals rather than zeros.

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace topicdiff {

struct AssociationConfig {
    double epsilon = 1e-6;

    void validate() const {
        if (!(epsilon > 0.0))
            throw std::invalid_argument("AssociationConfig: epsilon must be positive");
    }
};

struct TopicPrior {
    std::vector<double> probs;  // length k, sums to 1
};

struct TermPrior {
    std::vector<double> probs;  // length p, entries in [0,1]
};

struct TermPosterior {
    int term = -1;
    std::string window_label;
    std::vector<double> dist;  // length k; sums to 1 when supported
    bool supported = false;
};

// P(topic_k): share of documents associated with topic k in W, normalized
// over topics so the prior is a distribution.
inline TopicPrior topic_prior(const Eigen::MatrixXd& w, const AssociationConfig& cfg) {
    cfg.validate();
    const int k = static_cast<int>(w.cols());
    std::vector<double> counts(k, 0.0);
    double total = 0.0;
    for (int topic = 0; topic < k; ++topic) {
        counts[topic] = static_cast<double>((w.col(topic).array() > cfg.epsilon).count());
        total += counts[topic];
    }
    if (total == 0.0)
        throw std::runtime_error("topic_prior: no document is associated with any topic "
                                 "(degenerate factorization)");
    for (double& c : counts) c /= total;
    return TopicPrior{std::move(counts)};
}

// P(term_i): fraction of topics whose H_hat entry for the term is above
// epsilon. Exposed for the broadness classification; the posterior itself
// renormalizes and does not consume it.
inline TermPrior term_prior(const Eigen::MatrixXd& h_hat, const AssociationConfig& cfg) {
    cfg.validate();
    const int k = static_cast<int>(h_hat.rows());
    const int p = static_cast<int>(h_hat.cols());
    std::vector<double> probs(p, 0.0);
    for (int i = 0; i < p; ++i)
        probs[i] = static_cast<double>((h_hat.col(i).array() > cfg.epsilon).count()) / k;
    return TermPrior{std::move(probs)};
}

// P(topic_k | term): H_hat(k, term) * prior_k over associated topics,
// renormalized. A term associated with no topic is flagged unsupported.
inline TermPosterior term_posterior(const Eigen::MatrixXd& h_hat, const TopicPrior& prior,
                                    int term, const AssociationConfig& cfg) {
    cfg.validate();
    const int k = static_cast<int>(h_hat.rows());
    if (static_cast<int>(prior.probs.size()) != k)
        throw std::invalid_argument("term_posterior: prior length does not match topic count");
    if (term < 0 || term >= h_hat.cols())
        throw std::invalid_argument("term_posterior: term index out of range");

    TermPosterior posterior;
    posterior.term = term;
    posterior.dist.assign(k, 0.0);
    double total = 0.0;
    for (int topic = 0; topic < k; ++topic) {
        const double h = h_hat(topic, term);
        const double u = h > cfg.epsilon ? h * prior.probs[topic] : 0.0;
        posterior.dist[topic] = u;
        total += u;
    }
    if (total <= 0.0) {
        posterior.dist.assign(k, 0.0);
        posterior.supported = false;
        return posterior;
    }
    for (double& u : posterior.dist) u /= total;
    posterior.supported = true;
    return posterior;
}

}  // namespace topicdiff
