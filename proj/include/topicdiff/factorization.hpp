#pragma once

// Sparseness-constrained nonsmooth NMF: X ~ W * S * H with the smoothing
// matrix S = (1-theta)*I + (theta/k)*ones, fitted by alternating
// multiplicative updates, plus the row normalization X ~ W * S_hat * H_hat
// that turns H rows into per-topic term distributions.

#include <cassert>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "topicdiff/corpus.hpp"

namespace topicdiff {

struct FitOptions {
    int k = 10;
    double theta = 0.4;
    int max_iter = 2000;
    double rel_tol = 1e-6;
    std::uint64_t seed = 0;

    void validate() const {
        if (k < 1) throw std::invalid_argument("FitOptions: k must be >= 1");
        if (!(theta >= 0.0 && theta <= 1.0))
            throw std::invalid_argument("FitOptions: theta must lie in [0,1]");
        if (max_iter < 1) throw std::invalid_argument("FitOptions: max_iter must be >= 1");
        if (!(rel_tol > 0.0)) throw std::invalid_argument("FitOptions: rel_tol must be positive");
    }

    friend bool operator==(const FitOptions&, const FitOptions&) = default;
};

struct FactorModel {
    Eigen::MatrixXd W;  // n x k basis, documents over topics
    Eigen::MatrixXd H;  // k x p coefficients, topics over terms
    FitOptions options;
    std::vector<double> objective_trace;  // initial value, then one per sweep
    int iterations_run = 0;
};

struct NormalizedModel {
    Eigen::MatrixXd W;      // n x k
    Eigen::MatrixXd S_hat;  // k x k, S * D_h
    Eigen::MatrixXd H_hat;  // k x p, rows sum to 1 except empty topics
    std::vector<int> empty_topics;  // topics whose H row was all zero
    FitOptions options;
};

// S = (1-theta)*I + (theta/k)*ones: symmetric and doubly stochastic.
// theta = 0 gives the identity (plain NMF); theta = 1 the uniform mixer.
inline Eigen::MatrixXd smoothing_matrix(int k, double theta) {
    if (k < 1) throw std::invalid_argument("smoothing_matrix: k must be >= 1");
    if (!(theta >= 0.0 && theta <= 1.0))
        throw std::invalid_argument("smoothing_matrix: theta must lie in [0,1]");
    Eigen::MatrixXd s = Eigen::MatrixXd::Constant(k, k, theta / k);
    s.diagonal().array() += 1.0 - theta;
    return s;
}

namespace detail {

// Uniform draw in (0,1], filled in row-major order for reproducibility.
class SeededUniform {
public:
    explicit SeededUniform(std::uint64_t seed) : state_(seed) {}

    double next() {
        // splitmix64; the +1 keeps the draw strictly positive.
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        z ^= z >> 31;
        return (static_cast<double>(z >> 11) + 1.0) * 0x1p-53;
    }

    void fill(Eigen::MatrixXd& m) {
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = next();
    }

private:
    std::uint64_t state_;
};

}  // namespace detail

// Alternating multiplicative updates on 0.5*||X - W*S*H||_F^2 with S
// fixed by (k, theta): H is updated against the smoothed basis W*S, then
// W against the smoothed coefficients S*H. Stops at max_iter or when the
// relative objective change per sweep falls below rel_tol.
inline FactorModel fit(const Eigen::MatrixXd& x, const FitOptions& opts) {
    opts.validate();
    const Eigen::Index n = x.rows();
    const Eigen::Index p = x.cols();
    if (opts.k > std::min(n, p))
        throw std::invalid_argument("fit: k must not exceed min(n, p)");
    if ((x.array() < 0.0).any()) throw std::invalid_argument("fit: X must be non-negative");
    if (!x.allFinite()) throw std::invalid_argument("fit: X must be finite");
    if (x.isZero(0.0)) throw std::invalid_argument("fit: X is the zero matrix");

    constexpr double kDenomFloor = 1e-12;
    const int k = opts.k;
    const Eigen::MatrixXd s = smoothing_matrix(k, opts.theta);

    FactorModel model;
    model.options = opts;
    detail::SeededUniform rng(opts.seed);
    model.W.resize(n, k);
    model.H.resize(k, p);
    rng.fill(model.W);
    rng.fill(model.H);

    const auto objective = [&] {
        return 0.5 * (x - model.W * s * model.H).squaredNorm();
    };

    double prev = objective();
    if (!std::isfinite(prev))
        throw std::runtime_error("fit: non-finite objective at initialization");
    model.objective_trace.push_back(prev);

    for (int sweep = 1; sweep <= opts.max_iter; ++sweep) {
        // H <- H .* (A^T X) ./ (A^T A H), A = W * S
        const Eigen::MatrixXd a = model.W * s;
        const Eigen::MatrixXd h_numer = a.transpose() * x;
        const Eigen::MatrixXd h_denom = a.transpose() * a * model.H;
        model.H.array() *= h_numer.array() / (h_denom.array() + kDenomFloor);

        // W <- W .* (X B^T) ./ (W B B^T), B = S * H
        const Eigen::MatrixXd b = s * model.H;
        const Eigen::MatrixXd w_numer = x * b.transpose();
        const Eigen::MatrixXd w_denom = model.W * (b * b.transpose());
        model.W.array() *= w_numer.array() / (w_denom.array() + kDenomFloor);

        assert(model.W.minCoeff() >= 0.0 && model.H.minCoeff() >= 0.0);

        const double current = objective();
        if (!std::isfinite(current))
            throw std::runtime_error("fit: non-finite objective at sweep " +
                                     std::to_string(sweep));
        model.objective_trace.push_back(current);
        model.iterations_run = sweep;

        if (prev > 0.0 && (prev - current) < opts.rel_tol * prev) break;
        if (current == 0.0) break;
        prev = current;
    }
    return model;
}

inline FactorModel fit(const DocTermMatrix& x, const FitOptions& opts) {
    return fit(x.values, opts);
}

// Rewrites W*S*H as W*(S*D_h)*(D_h^-1*H) with D_h the diagonal of H row
// sums, so each nonzero H_hat row is the term distribution of its topic.
// All-zero H rows are kept as-is (unit scaling) and reported.
inline NormalizedModel normalize(const FactorModel& model) {
    const int k = model.options.k;
    const Eigen::MatrixXd s = smoothing_matrix(k, model.options.theta);

    NormalizedModel normalized;
    normalized.W = model.W;
    normalized.options = model.options;
    normalized.H_hat = model.H;

    Eigen::VectorXd scale(k);
    for (int topic = 0; topic < k; ++topic) {
        const double row_sum = model.H.row(topic).sum();
        if (row_sum > 0.0) {
            scale(topic) = row_sum;
            normalized.H_hat.row(topic) /= row_sum;
        } else {
            scale(topic) = 1.0;
            normalized.empty_topics.push_back(topic);
        }
    }
    normalized.S_hat = s * scale.asDiagonal();
    return normalized;
}

// Frobenius norm of X - W*S*H; the square equals twice the fit objective.
inline double reconstruction_error(const FactorModel& model, const Eigen::MatrixXd& x) {
    if (x.rows() != model.W.rows() || x.cols() != model.H.cols())
        throw std::invalid_argument("reconstruction_error: dimension mismatch");
    const Eigen::MatrixXd s = smoothing_matrix(model.options.k, model.options.theta);
    return (x - model.W * s * model.H).norm();
}

inline double reconstruction_error(const FactorModel& model, const DocTermMatrix& x) {
    return reconstruction_error(model, x.values);
}

}  // namespace topicdiff
