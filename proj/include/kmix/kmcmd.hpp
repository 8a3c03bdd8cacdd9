#pragma once

// K-means-style clustering for mixed data: frequency-based centers, weighted
// numeric distance plus co-occurrence categorical distance, batch updates
// from a supplied initial partition.

#include <cstdint>
#include <limits>
#include <vector>

#include "kmix/codist.hpp"
#include "kmix/common.hpp"
#include "kmix/dataset.hpp"

namespace kmix {

struct ClusterCenter {
    std::vector<double> numeric_means;             // m_r
    std::vector<std::vector<double>> cat_freqs;    // per categorical attribute, over its values
};

struct KmcmdOptions {
    int max_iterations = 100;
    // The numeric term squares the product w*(x-mu); turning this off squares
    // only the difference, kept for experimentation.
    bool weight_inside_square = true;
};

struct KmcmdResult {
    Partition partition;
    std::vector<ClusterCenter> centers;
    int iterations = 0;
    bool converged = false;
    int repairs = 0;  // empty-cluster reseeds performed
    double cost = 0.0;
};

namespace detail {

// Row indices of every numeric column sorted by value, so per-cluster sums
// can run in value order (order-invariant: equal values commute exactly).
// Computed once per clustering run; the per-sweep work stays linear.
inline std::vector<std::vector<std::size_t>> value_orders(const Dataset& ds) {
    std::vector<std::vector<std::size_t>> orders(static_cast<std::size_t>(ds.m_r()));
    for (int t = 0; t < ds.m_r(); ++t) {
        const auto& col = ds.numeric_cols[static_cast<std::size_t>(t)];
        auto& order = orders[static_cast<std::size_t>(t)];
        order.resize(ds.n);
        for (std::size_t r = 0; r < ds.n; ++r) order[r] = r;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return col[a] < col[b]; });
    }
    return orders;
}

// Centers of every non-empty cluster; empty clusters get empty placeholders.
inline std::vector<ClusterCenter> centers_allow_empty(const Dataset& ds, const Partition& part,
                                                      const std::vector<std::size_t>& sizes,
                                                      const std::vector<std::vector<std::size_t>>& value_order) {
    const int k = part.k;
    std::vector<ClusterCenter> centers(static_cast<std::size_t>(k));
    for (int c = 0; c < k; ++c) {
        if (sizes[static_cast<std::size_t>(c)] == 0) continue;
        centers[static_cast<std::size_t>(c)].numeric_means.assign(static_cast<std::size_t>(ds.m_r()), 0.0);
        centers[static_cast<std::size_t>(c)].cat_freqs.resize(static_cast<std::size_t>(ds.m_c()));
    }
    for (int t = 0; t < ds.m_r(); ++t) {
        const auto& col = ds.numeric_cols[static_cast<std::size_t>(t)];
        // Neumaier sums per cluster, fed in ascending value order.
        std::vector<double> sum(static_cast<std::size_t>(k), 0.0), comp(static_cast<std::size_t>(k), 0.0);
        for (std::size_t r : value_order[static_cast<std::size_t>(t)]) {
            const auto c = static_cast<std::size_t>(part.labels[r]);
            const double x = col[r];
            const double t1 = sum[c] + x;
            if (std::abs(sum[c]) >= std::abs(x))
                comp[c] += (sum[c] - t1) + x;
            else
                comp[c] += (x - t1) + sum[c];
            sum[c] = t1;
        }
        for (int c = 0; c < k; ++c) {
            if (sizes[static_cast<std::size_t>(c)] == 0) continue;
            centers[static_cast<std::size_t>(c)].numeric_means[static_cast<std::size_t>(t)] =
                (sum[static_cast<std::size_t>(c)] + comp[static_cast<std::size_t>(c)]) /
                static_cast<double>(sizes[static_cast<std::size_t>(c)]);
        }
    }
    for (int t = 0; t < ds.m_c(); ++t) {
        const auto& col = ds.cat_cols[static_cast<std::size_t>(t)];
        const int x = ds.alphabet(t);
        std::vector<std::int64_t> counts(static_cast<std::size_t>(k) * x, 0);
        for (std::size_t r = 0; r < ds.n; ++r)
            ++counts[static_cast<std::size_t>(part.labels[r]) * x + col[r]];
        for (int c = 0; c < k; ++c) {
            if (sizes[static_cast<std::size_t>(c)] == 0) continue;
            auto& freqs = centers[static_cast<std::size_t>(c)].cat_freqs[static_cast<std::size_t>(t)];
            freqs.assign(static_cast<std::size_t>(x), 0.0);
            const double inv = 1.0 / static_cast<double>(sizes[static_cast<std::size_t>(c)]);
            for (int v = 0; v < x; ++v)
                freqs[static_cast<std::size_t>(v)] = static_cast<double>(counts[static_cast<std::size_t>(c) * x + v]) * inv;
        }
    }
    return centers;
}

}  // namespace detail

inline std::vector<ClusterCenter> compute_centers(const Dataset& ds, const Partition& part) {
    part.validate(ds.n);
    auto sizes = part.cluster_sizes();
    for (std::size_t c = 0; c < sizes.size(); ++c)
        require(sizes[c] > 0, errc::parameter, "compute_centers: empty cluster " + std::to_string(c));
    return detail::centers_allow_empty(ds, part, sizes, detail::value_orders(ds));
}

// Point-to-center distance: weighted squared numeric displacement
// plus, per categorical attribute, the square of the frequency-weighted mean
// delta from the center's value distribution to the point's value.
inline double point_center_distance(const Dataset& ds, const DistanceModel& model, std::size_t row,
                                    const ClusterCenter& center, const KmcmdOptions& opts = {}) {
    double dist = 0.0;
    for (int t = 0; t < ds.m_r(); ++t) {
        double diff = ds.numeric_cols[static_cast<std::size_t>(t)][row] -
                      center.numeric_means[static_cast<std::size_t>(t)];
        double w = model.weights[static_cast<std::size_t>(t)];
        dist += opts.weight_inside_square ? (w * diff) * (w * diff) : w * diff * diff;
    }
    for (int t = 0; t < ds.m_c(); ++t) {
        const auto& freqs = center.cat_freqs[static_cast<std::size_t>(t)];
        const auto& dm = model.delta[static_cast<std::size_t>(t)];
        const std::int32_t x = ds.cat_cols[static_cast<std::size_t>(t)][row];
        double omega = 0.0;
        for (int v = 0; v < dm.dim; ++v) omega += freqs[static_cast<std::size_t>(v)] * dm.at(v, x);
        dist += omega * omega;
    }
    return dist;
}

namespace detail {

// Reseeds each empty cluster with the point farthest from its own center.
// Ties: larger distance, then lexicographically smaller row content, then
// lower row index. Returns the number of reseeds.
inline int repair_empty_clusters(const Dataset& ds, const DistanceModel& model, Partition& part,
                                 const KmcmdOptions& opts,
                                 const std::vector<std::vector<std::size_t>>& value_order) {
    int repairs = 0;
    for (;;) {
        auto sizes = part.cluster_sizes();
        int empty = -1;
        for (int c = 0; c < part.k; ++c)
            if (sizes[static_cast<std::size_t>(c)] == 0) {
                empty = c;
                break;
            }
        if (empty < 0) return repairs;
        auto centers = centers_allow_empty(ds, part, sizes, value_order);
        std::size_t best_row = ds.n;
        double best_dist = -1.0;
        for (std::size_t r = 0; r < ds.n; ++r) {
            int own = part.labels[r];
            if (sizes[static_cast<std::size_t>(own)] < 2) continue;  // keep the source alive
            double d = point_center_distance(ds, model, r, centers[static_cast<std::size_t>(own)], opts);
            bool better = d > best_dist;
            if (d == best_dist && best_row < ds.n)
                better = ds.row_content_less(r, best_row);
            if (better) {
                best_dist = d;
                best_row = r;
            }
        }
        require(best_row < ds.n, errc::internal, "repair: no movable point for empty cluster");
        part.labels[best_row] = empty;
        ++repairs;
    }
}

}  // namespace detail

// Lloyd-style alternation from the supplied initial partition. Stops when a
// sweep moves no point or after max_iterations sweeps. Assignment ties go to
// the lowest cluster index; empty clusters are repaired deterministically.
inline KmcmdResult iterate(const Dataset& ds, const DistanceModel& model, const Partition& init,
                           const KmcmdOptions& opts = {}) {
    init.validate(ds.n);
    require(static_cast<std::size_t>(init.k) <= ds.n, errc::parameter, "iterate: k exceeds number of rows");
    require(opts.max_iterations >= 1, errc::parameter, "iterate: max_iterations must be >= 1");

    KmcmdResult res;
    res.partition = init;
    const auto value_order = detail::value_orders(ds);
    res.repairs += detail::repair_empty_clusters(ds, model, res.partition, opts, value_order);

    const int k = init.k;
    for (int sweep = 1; sweep <= opts.max_iterations; ++sweep) {
        res.iterations = sweep;
        auto sizes = res.partition.cluster_sizes();
        auto centers = detail::centers_allow_empty(ds, res.partition, sizes, value_order);

        std::size_t changes = 0;
        double cost_old = 0.0, cost_new = 0.0;
        for (std::size_t r = 0; r < ds.n; ++r) {
            int best = 0;
            double best_dist = std::numeric_limits<double>::infinity();
            double own_dist = 0.0;
            const int old_label = res.partition.labels[r];
            for (int c = 0; c < k; ++c) {
                double d = point_center_distance(ds, model, r, centers[static_cast<std::size_t>(c)], opts);
                if (c == old_label) own_dist = d;
                if (d < best_dist) {
                    best_dist = d;
                    best = c;
                }
            }
            cost_old += own_dist;
            cost_new += best_dist;
            if (best != old_label) {
                res.partition.labels[r] = best;
                ++changes;
            }
        }
        require(cost_new <= cost_old + 1e-9 * (1.0 + std::abs(cost_old)), errc::internal,
                "iterate: reassignment increased the objective");

        if (changes == 0) {
            res.converged = true;
            break;
        }
        res.repairs += detail::repair_empty_clusters(ds, model, res.partition, opts, value_order);
    }

    auto sizes = res.partition.cluster_sizes();
    res.centers = detail::centers_allow_empty(ds, res.partition, sizes, value_order);
    double cost = 0.0;
    for (std::size_t r = 0; r < ds.n; ++r)
        cost += point_center_distance(ds, model, r, res.centers[static_cast<std::size_t>(res.partition.labels[r])],
                                      opts);
    res.cost = cost;
    return res;
}

}  // namespace kmix
