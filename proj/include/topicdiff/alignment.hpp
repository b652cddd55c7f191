#pragma once

// Topic matching across time windows: minimum-cost assignment over
// pairwise Jensen-Shannon divergences of H_hat rows, chained so every
// window's topic j lines up with topic j of its aligned predecessor.

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "topicdiff/divergence.hpp"
#include "topicdiff/factorization.hpp"

namespace topicdiff {

struct CostMatrix {
    Eigen::MatrixXd values;  // k x k, entry (a,b) = jsd of earlier row a vs later row b
    std::string row_window;
    std::string col_window;
};

struct Assignment {
    std::vector<int> perm;  // earlier topic a -> later topic perm[a]
    double total_cost = 0.0;
};

// Pairwise JSD of per-topic term distributions. Empty topics cost 1
// against any real topic and 0 against each other, so they pair up last.
inline CostMatrix topic_cost_matrix(const NormalizedModel& earlier, const NormalizedModel& later,
                                    std::string row_window = {}, std::string col_window = {}) {
    if (earlier.H_hat.rows() != later.H_hat.rows() || earlier.H_hat.cols() != later.H_hat.cols())
        throw std::invalid_argument("topic_cost_matrix: models must share k and dictionary size");
    const int k = static_cast<int>(earlier.H_hat.rows());

    const auto is_empty = [](const NormalizedModel& m, int topic) {
        return std::find(m.empty_topics.begin(), m.empty_topics.end(), topic) !=
               m.empty_topics.end();
    };
    const auto row_dist = [](const NormalizedModel& m, int topic) {
        const auto row = m.H_hat.row(topic);
        return ProbDist(row.begin(), row.end());
    };

    CostMatrix cost;
    cost.values.resize(k, k);
    cost.row_window = std::move(row_window);
    cost.col_window = std::move(col_window);
    for (int a = 0; a < k; ++a) {
        const bool a_empty = is_empty(earlier, a);
        const ProbDist pa = a_empty ? ProbDist{} : row_dist(earlier, a);
        for (int b = 0; b < k; ++b) {
            const bool b_empty = is_empty(later, b);
            if (a_empty || b_empty) {
                cost.values(a, b) = (a_empty && b_empty) ? 0.0 : 1.0;
            } else {
                cost.values(a, b) = jsd_pair(pa, row_dist(later, b));
            }
        }
    }
    return cost;
}

namespace detail {

// O(n^3) shortest-augmenting-path assignment with potentials. Rows and
// columns are 1-based internally; returns row -> column (0-based).
inline std::vector<int> assignment_core(const Eigen::MatrixXd& cost) {
    const int n = static_cast<int>(cost.rows());
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            int j1 = -1;
            double delta = inf;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    std::vector<int> perm(n, -1);
    for (int j = 1; j <= n; ++j)
        if (p[j] > 0) perm[p[j] - 1] = j - 1;
    return perm;
}

// Minimum assignment total over cost restricted to (rows, cols), summed
// in row order so candidate totals compare deterministically.
inline double restricted_minimum(const Eigen::MatrixXd& cost, const std::vector<int>& rows,
                                 const std::vector<int>& cols) {
    const int m = static_cast<int>(rows.size());
    if (m == 0) return 0.0;
    Eigen::MatrixXd sub(m, m);
    for (int r = 0; r < m; ++r)
        for (int c = 0; c < m; ++c) sub(r, c) = cost(rows[r], cols[c]);
    const std::vector<int> perm = assignment_core(sub);
    double total = 0.0;
    for (int r = 0; r < m; ++r) total += sub(r, perm[r]);
    return total;
}

}  // namespace detail

// Minimum-total-cost perfect matching. Among equal-cost optima the
// lexicographically smallest permutation wins: each row takes the lowest
// column that still admits an optimal completion (checked with the
// O(n^3) core, so the tie-break costs O(n^5) worst case).
inline Assignment hungarian(const CostMatrix& cost) {
    const Eigen::MatrixXd& c = cost.values;
    if (c.rows() != c.cols()) throw std::invalid_argument("hungarian: cost matrix must be square");
    if (c.rows() == 0) throw std::invalid_argument("hungarian: empty cost matrix");
    if (!c.allFinite()) throw std::invalid_argument("hungarian: cost entries must be finite");
    if ((c.array() < 0.0).any())
        throw std::invalid_argument("hungarian: cost entries must be non-negative");
    const int n = static_cast<int>(c.rows());

    std::vector<int> free_cols(n);
    std::iota(free_cols.begin(), free_cols.end(), 0);

    Assignment result;
    result.perm.assign(n, -1);
    for (int a = 0; a < n; ++a) {
        std::vector<int> tail_rows;
        for (int r = a + 1; r < n; ++r) tail_rows.push_back(r);

        int best_col = -1;
        double best_total = std::numeric_limits<double>::infinity();
        for (int idx = 0; idx < static_cast<int>(free_cols.size()); ++idx) {
            const int col = free_cols[idx];
            std::vector<int> tail_cols;
            for (int j = 0; j < static_cast<int>(free_cols.size()); ++j)
                if (j != idx) tail_cols.push_back(free_cols[j]);
            const double total =
                c(a, col) + detail::restricted_minimum(c, tail_rows, tail_cols);
            if (total < best_total) {
                best_total = total;
                best_col = col;
            }
        }
        result.perm[a] = best_col;
        free_cols.erase(std::find(free_cols.begin(), free_cols.end(), best_col));
    }

    result.total_cost = 0.0;
    for (int a = 0; a < n; ++a) result.total_cost += c(a, result.perm[a]);
    return result;
}

// Reorders topics so new index a holds old topic perm[a]; applied to W
// columns, H_hat rows, S_hat rows and columns, and the empty-topic set.
inline NormalizedModel permute_topics(const NormalizedModel& model, const std::vector<int>& perm) {
    const int k = static_cast<int>(model.H_hat.rows());
    if (static_cast<int>(perm.size()) != k)
        throw std::invalid_argument("permute_topics: permutation length mismatch");

    NormalizedModel out;
    out.options = model.options;
    out.W.resize(model.W.rows(), k);
    out.H_hat.resize(k, model.H_hat.cols());
    out.S_hat.resize(k, k);
    for (int a = 0; a < k; ++a) {
        out.W.col(a) = model.W.col(perm[a]);
        out.H_hat.row(a) = model.H_hat.row(perm[a]);
        for (int b = 0; b < k; ++b) out.S_hat(a, b) = model.S_hat(perm[a], perm[b]);
        if (std::find(model.empty_topics.begin(), model.empty_topics.end(), perm[a]) !=
            model.empty_topics.end())
            out.empty_topics.push_back(a);
    }
    return out;
}

struct AlignmentStep {
    std::string earlier_window;
    std::string later_window;
    std::vector<int> permutation;
    double total_cost = 0.0;
};

struct AlignedChain {
    std::vector<NormalizedModel> models;
    std::vector<AlignmentStep> steps;  // one per adjacent window pair
};

// Window 1 is left as fitted; every later window is matched against its
// already-aligned predecessor, so topic drift accumulates gradually
// instead of every window being forced onto window 1 directly.
inline AlignedChain align_chain(const std::vector<NormalizedModel>& models,
                                const std::vector<std::string>& labels = {}) {
    if (models.empty()) throw std::invalid_argument("align_chain: no models");
    if (!labels.empty() && labels.size() != models.size())
        throw std::invalid_argument("align_chain: one label per model required");
    for (const auto& m : models)
        if (m.H_hat.rows() != models.front().H_hat.rows() ||
            m.H_hat.cols() != models.front().H_hat.cols())
            throw std::invalid_argument("align_chain: models must share k and dictionary size");

    const auto label = [&](std::size_t i) {
        return labels.empty() ? "window_" + std::to_string(i + 1) : labels[i];
    };

    AlignedChain chain;
    chain.models.push_back(models.front());
    for (std::size_t m = 1; m < models.size(); ++m) {
        const CostMatrix cost =
            topic_cost_matrix(chain.models.back(), models[m], label(m - 1), label(m));
        const Assignment assignment = hungarian(cost);
        chain.models.push_back(permute_topics(models[m], assignment.perm));
        chain.steps.push_back(
            AlignmentStep{label(m - 1), label(m), assignment.perm, assignment.total_cost});
    }
    return chain;
}

}  // namespace topicdiff
