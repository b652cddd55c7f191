#pragma once

// Entropy, generalized Jensen-Shannon divergence, and the chi-square
// significance threshold used to decide whether a term's topic
// distribution has drifted over time.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace topicdiff {

using ProbDist = std::vector<double>;

struct GjsResult {
    double value = 0.0;
    int base = 2;                  // logarithm base of the entropies
    std::vector<double> weights;   // mixture weights, sum to 1
};

struct ThresholdParams {
    int k;          // topic count (entropy base)
    int t;          // number of distributions compared
    double alpha;   // significance level

    int df() const { return (k - 1) * (t - 1); }
    int cells() const { return k * t; }

    void validate() const {
        if (k < 2) throw std::invalid_argument("ThresholdParams: k must be >= 2");
        if (t < 2) throw std::invalid_argument("ThresholdParams: t must be >= 2");
        if (!(alpha > 0.0 && alpha < 1.0))
            throw std::invalid_argument("ThresholdParams: alpha must lie in (0,1)");
    }
};

namespace detail {

inline void validate_dist(std::span<const double> dist, const char* where) {
    if (dist.empty())
        throw std::invalid_argument(std::string(where) + ": empty distribution");
    double sum = 0.0;
    for (double p : dist) {
        if (!std::isfinite(p) || p < 0.0)
            throw std::invalid_argument(std::string(where) +
                                        ": distribution entries must be finite and >= 0");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument(std::string(where) + ": distribution must sum to 1");
}

// -sum p ln p, with 0 ln 0 = 0. Callers divide by ln(base).
inline double entropy_nats(std::span<const double> dist) {
    double h = 0.0;
    for (double p : dist)
        if (p > 0.0) h -= p * std::log(p);
    return h;
}

}  // namespace detail

// k-ary Shannon entropy. Equals 1 for the uniform distribution over k
// outcomes; zero entries contribute nothing.
inline double entropy_k(std::span<const double> dist, int k) {
    if (k < 2) throw std::invalid_argument("entropy_k: base k must be >= 2");
    detail::validate_dist(dist, "entropy_k");
    return detail::entropy_nats(dist) / std::log(static_cast<double>(k));
}

// Generalized Jensen-Shannon divergence: entropy of the weighted mixture
// minus the weighted mean of the component entropies, all base k.
inline GjsResult gjs(std::span<const ProbDist> dists, std::span<const double> weights, int k) {
    if (dists.empty()) throw std::invalid_argument("gjs: no distributions");
    if (weights.size() != dists.size())
        throw std::invalid_argument("gjs: weight count does not match distribution count");
    if (k < 2) throw std::invalid_argument("gjs: base k must be >= 2");
    detail::validate_dist(weights, "gjs(weights)");

    const std::size_t m = dists.front().size();
    for (const auto& d : dists) {
        if (d.size() != m) throw std::invalid_argument("gjs: distribution length mismatch");
        detail::validate_dist(d, "gjs");
    }

    std::vector<double> mixture(m, 0.0);
    double mean_entropy = 0.0;
    const double log_k = std::log(static_cast<double>(k));
    for (std::size_t i = 0; i < dists.size(); ++i) {
        for (std::size_t j = 0; j < m; ++j) mixture[j] += weights[i] * dists[i][j];
        mean_entropy += weights[i] * detail::entropy_nats(dists[i]) / log_k;
    }

    double value = detail::entropy_nats(mixture) / log_k - mean_entropy;
    // Concavity bounds the value in [0,1]; clamp fp noise only.
    if (value < 0.0 && value > -1e-12) value = 0.0;
    if (value > 1.0 && value < 1.0 + 1e-12) value = 1.0;

    GjsResult result;
    result.value = value;
    result.base = k;
    result.weights.assign(weights.begin(), weights.end());
    return result;
}

// Equal-weight convenience form.
inline GjsResult gjs(std::span<const ProbDist> dists, int k) {
    if (dists.empty()) throw std::invalid_argument("gjs: no distributions");
    std::vector<double> weights(dists.size(), 1.0 / static_cast<double>(dists.size()));
    return gjs(dists, weights, k);
}

// Two-distribution Jensen-Shannon divergence, base 2, equal weights.
// Used as the assignment cost when matching topics across windows.
inline double jsd_pair(const ProbDist& p, const ProbDist& q) {
    if (p.size() != q.size()) throw std::invalid_argument("jsd_pair: length mismatch");
    const std::vector<ProbDist> pair{p, q};
    const std::vector<double> weights{0.5, 0.5};
    return gjs(pair, weights, 2).value;
}

namespace detail {

// Regularized lower incomplete gamma P(a, x), series for x < a+1 and
// continued fraction otherwise.
inline double gamma_p(double a, double x) {
    if (a <= 0.0) throw std::invalid_argument("gamma_p: a must be positive");
    if (x < 0.0) throw std::invalid_argument("gamma_p: x must be non-negative");
    if (x == 0.0) return 0.0;

    const double log_prefactor = -x + a * std::log(x) - std::lgamma(a);
    if (x < a + 1.0) {
        double term = 1.0 / a;
        double sum = term;
        for (int n = 1; n < 10000; ++n) {
            term *= x / (a + n);
            sum += term;
            if (std::abs(term) < std::abs(sum) * 1e-16) break;
        }
        return sum * std::exp(log_prefactor);
    }
    // Lentz's algorithm for the upper-tail continued fraction.
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 10000; ++i) {
        const double an = -static_cast<double>(i) * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-16) break;
    }
    const double q = std::exp(log_prefactor) * h;
    return 1.0 - q;
}

}  // namespace detail

// Chi-square quantile via inversion of the regularized incomplete gamma
// function: returns x with CDF_df(x) = prob. Bracketed Newton iteration,
// stable through at least df = 10000.
inline double chi2_quantile(int df, double prob) {
    if (df < 1) throw std::invalid_argument("chi2_quantile: df must be >= 1");
    if (!(prob > 0.0 && prob < 1.0))
        throw std::invalid_argument("chi2_quantile: prob must lie in (0,1)");

    const double a = 0.5 * df;
    const double cdf = prob;

    // Wilson-Hilferty starting point.
    const double z = [&] {
        // Inverse normal CDF (Acklam-style rational approximation is more
        // than enough for a Newton seed).
        const double p = cdf;
        const double q = p - 0.5;
        if (std::abs(q) <= 0.425) {
            const double r = 0.180625 - q * q;
            return q * (((((((2509.0809287301226727 * r + 33430.575583588128105) * r +
                             67265.770927008700853) * r + 45921.953931549871457) * r +
                           13731.693765509461125) * r + 1971.5909503065514427) * r +
                         133.14166789178437745) * r + 3.387132872796366608) /
                   (((((((5226.495278852545703 * r + 28729.085735721942674) * r +
                         39307.89580009271061) * r + 21213.794301586595867) * r +
                       5394.1960214247511077) * r + 687.1870074920579083) * r +
                     42.313330701600911252) * r + 1.0);
        }
        double r = q < 0.0 ? p : 1.0 - p;
        r = std::sqrt(-std::log(r));
        double v;
        if (r <= 5.0) {
            r -= 1.6;
            v = (((((((7.7454501427834140764e-4 * r + 0.0227238449892691845833) * r +
                      0.24178072517745061177) * r + 1.27045825245236838258) * r +
                    3.64784832476320460504) * r + 5.7694972214606914055) * r +
                  4.6303378461565452959) * r + 1.42343711074968357734) /
                (((((((1.05075007164441684324e-9 * r + 5.475938084995344946e-4) * r +
                      0.0151986665636164571966) * r + 0.14810397642748007459) * r +
                    0.68976733498510000455) * r + 1.6763848301838038494) * r +
                  2.05319162663775882187) * r + 1.0);
        } else {
            r -= 5.0;
            v = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                      0.0012426609473880784386) * r + 0.026532189526576123093) * r +
                    0.29656057182850489123) * r + 1.7848265399172913358) * r +
                  5.4637849111641143699) * r + 6.6579046435011037772) /
                (((((((2.04426310338993978564e-15 * r + 1.4215117583164458887e-7) * r +
                      1.8463183175100546818e-5) * r + 7.868691311456132591e-4) * r +
                    0.0148753612908506148525) * r + 0.13692988092273580531) * r +
                  0.59983220655588793769) * r + 1.0);
        }
        return q < 0.0 ? -v : v;
    }();
    const double wh = 1.0 - 2.0 / (9.0 * df) + z * std::sqrt(2.0 / (9.0 * df));
    double x = df * wh * wh * wh;
    if (!(x > 0.0)) x = 0.5;

    // Bracket, then safeguarded Newton on F(x) = P(a, x/2) - prob.
    double lo = 0.0;
    double hi = std::max(x, 1.0);
    while (detail::gamma_p(a, 0.5 * hi) < cdf) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e12) throw std::runtime_error("chi2_quantile: failed to bracket quantile");
    }
    const double log_norm = -a * std::log(2.0) - std::lgamma(a);
    for (int iter = 0; iter < 200; ++iter) {
        if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);
        const double f = detail::gamma_p(a, 0.5 * x) - cdf;
        if (f > 0.0) hi = x; else lo = x;
        const double log_pdf = (a - 1.0) * std::log(x) - 0.5 * x + log_norm;
        const double pdf = std::exp(log_pdf);
        double step = pdf > 0.0 ? f / pdf : 0.0;
        double next = step != 0.0 ? x - step : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - x) <= 1e-12 * std::max(1.0, std::abs(x))) return next;
        x = next;
    }
    return x;
}

// Significance threshold for the generalized Jensen-Shannon divergence:
// chi2 quantile at (k-1)(t-1) degrees of freedom over 2*N*ln(k), where
// N = k*t is the total number of cells.
inline double gjs_threshold(const ThresholdParams& params) {
    params.validate();
    const double quantile = chi2_quantile(params.df(), 1.0 - params.alpha);
    return quantile / (2.0 * params.cells() * std::log(static_cast<double>(params.k)));
}

}  // namespace topicdiff
