#pragma once

// Clustering accuracy against ground truth: each cluster is mapped to a
// distinct class so that the number of correctly assigned points is maximal
// (solved exactly as an assignment problem), plus mean / population-SD
// aggregation over repeated runs.

#include <cstdint>
#include <limits>
#include <vector>

#include "kmix/common.hpp"

namespace kmix {

struct Contingency {
    int k = 0, c = 0;
    std::size_t n = 0;
    std::vector<std::int64_t> counts;  // k * c, row-major

    std::int64_t at(int cluster, int cls) const { return counts[static_cast<std::size_t>(cluster) * c + cls]; }
};

inline Contingency contingency(const std::vector<int>& clusters, const std::vector<int>& truth, int k, int c) {
    require(clusters.size() == truth.size(), errc::parameter, "contingency: length mismatch");
    Contingency ct;
    ct.k = k;
    ct.c = c;
    ct.n = clusters.size();
    ct.counts.assign(static_cast<std::size_t>(k) * c, 0);
    for (std::size_t i = 0; i < clusters.size(); ++i) {
        require(clusters[i] >= 0 && clusters[i] < k, errc::parameter, "contingency: cluster label out of range");
        require(truth[i] >= 0 && truth[i] < c, errc::parameter, "contingency: class label out of range");
        ++ct.counts[static_cast<std::size_t>(clusters[i]) * c + truth[i]];
    }
    return ct;
}

namespace detail {

// Jonker-Volgenant style shortest augmenting path, O(n^3). Returns the
// minimum total cost; if `assignment` is given, fills row -> column.
inline double min_cost_assignment(const std::vector<std::vector<double>>& cost,
                                  std::vector<int>* assignment = nullptr) {
    const int n = static_cast<int>(cost.size());
    if (n == 0) return 0.0;
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0), v(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<int> p(static_cast<std::size_t>(n) + 1, 0), way(static_cast<std::size_t>(n) + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(static_cast<std::size_t>(n) + 1, inf);
        std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
        do {
            used[static_cast<std::size_t>(j0)] = 1;
            int i0 = p[static_cast<std::size_t>(j0)], j1 = -1;
            double delta = inf;
            for (int j = 1; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) continue;
                double cur = cost[static_cast<std::size_t>(i0) - 1][static_cast<std::size_t>(j) - 1] -
                             u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
                if (cur < minv[static_cast<std::size_t>(j)]) {
                    minv[static_cast<std::size_t>(j)] = cur;
                    way[static_cast<std::size_t>(j)] = j0;
                }
                if (minv[static_cast<std::size_t>(j)] < delta) {
                    delta = minv[static_cast<std::size_t>(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) {
                    u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
                    v[static_cast<std::size_t>(j)] -= delta;
                } else {
                    minv[static_cast<std::size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (p[static_cast<std::size_t>(j0)] != 0);
        do {
            int j1 = way[static_cast<std::size_t>(j0)];
            p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
            j0 = j1;
        } while (j0);
    }
    double total = 0.0;
    if (assignment) assignment->assign(static_cast<std::size_t>(n), -1);
    for (int j = 1; j <= n; ++j) {
        if (p[static_cast<std::size_t>(j)] == 0) continue;
        total += cost[static_cast<std::size_t>(p[static_cast<std::size_t>(j)]) - 1][static_cast<std::size_t>(j) - 1];
        if (assignment) (*assignment)[static_cast<std::size_t>(p[static_cast<std::size_t>(j)]) - 1] = j - 1;
    }
    return total;
}

// Maximum total over injective row -> column assignments, on a square
// integer-count matrix (passed as doubles). Exact because counts are small
// integers.
inline double max_assignment_value(const std::vector<std::vector<double>>& value) {
    const int n = static_cast<int>(value.size());
    std::vector<std::vector<double>> cost(static_cast<std::size_t>(n),
                                          std::vector<double>(static_cast<std::size_t>(n), 0.0));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) cost[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
            -value[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    return -min_cost_assignment(cost);
}

}  // namespace detail

struct AccuracyResult {
    double ac = 0.0;
    std::vector<int> mapping;  // per cluster: mapped class, -1 for a dummy (padding) class
};

// Clustering accuracy: the cluster -> class mapping maximizing the
// number of correct points, resolved to the lexicographically smallest
// optimal mapping. The contingency is zero-padded to square when k != c.
inline AccuracyResult accuracy(const std::vector<int>& clusters, const std::vector<int>& truth) {
    require(clusters.size() == truth.size(), errc::parameter, "accuracy: length mismatch");
    require(!clusters.empty(), errc::parameter, "accuracy: empty labelings");
    const int k = *std::max_element(clusters.begin(), clusters.end()) + 1;
    const int c = *std::max_element(truth.begin(), truth.end()) + 1;
    const int dim = std::max(k, c);
    Contingency ct = contingency(clusters, truth, k, c);

    std::vector<std::vector<double>> value(static_cast<std::size_t>(dim),
                                           std::vector<double>(static_cast<std::size_t>(dim), 0.0));
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < c; ++j)
            value[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = static_cast<double>(ct.at(i, j));

    double opt = detail::max_assignment_value(value);

    // Fix clusters in order, each to the smallest class (real classes before
    // dummy columns) that still allows an optimal completion.
    std::vector<char> row_free(static_cast<std::size_t>(dim), 1), col_free(static_cast<std::size_t>(dim), 1);
    std::vector<int> mapping(static_cast<std::size_t>(k), -1);
    double remaining = opt;
    for (int i = 0; i < k; ++i) {
        std::vector<int> col_order;
        for (int j = 0; j < dim; ++j)
            if (col_free[static_cast<std::size_t>(j)]) col_order.push_back(j);
        for (int j : col_order) {
            // Completion value for the submatrix without row i and column j.
            std::vector<int> rows, cols;
            for (int r = 0; r < dim; ++r)
                if (row_free[static_cast<std::size_t>(r)] && r != i) rows.push_back(r);
            for (int s = 0; s < dim; ++s)
                if (col_free[static_cast<std::size_t>(s)] && s != j) cols.push_back(s);
            std::vector<std::vector<double>> sub(rows.size(), std::vector<double>(cols.size(), 0.0));
            for (std::size_t r = 0; r < rows.size(); ++r)
                for (std::size_t s = 0; s < cols.size(); ++s)
                    sub[r][s] = value[static_cast<std::size_t>(rows[r])][static_cast<std::size_t>(cols[s])];
            double best = value[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] +
                          detail::max_assignment_value(sub);
            if (best == remaining) {
                mapping[static_cast<std::size_t>(i)] = (j < c) ? j : -1;
                remaining -= value[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
                row_free[static_cast<std::size_t>(i)] = 0;
                col_free[static_cast<std::size_t>(j)] = 0;
                break;
            }
        }
        require(!row_free[static_cast<std::size_t>(i)], errc::internal,
                "accuracy: failed to fix an optimal mapping");
    }

    AccuracyResult res;
    res.mapping = std::move(mapping);
    res.ac = opt / static_cast<double>(ct.n);
    return res;
}

inline AccuracyResult accuracy(const Partition& part, const std::vector<int>& truth) {
    return accuracy(part.labels, truth);
}

inline double mean_accuracy(const std::vector<double>& acs) {
    require(!acs.empty(), errc::parameter, "mean_accuracy: empty list");
    return detail::stable_mean(acs);
}

// Population standard deviation (divisor T).
inline double accuracy_sd(const std::vector<double>& acs) {
    require(!acs.empty(), errc::parameter, "accuracy_sd: empty list");
    return detail::stable_stddev(acs, detail::stable_mean(acs));
}

}  // namespace kmix
