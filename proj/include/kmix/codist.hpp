#pragma once

// Data-driven distance model for mixed data. The distance between two values
// of a categorical attribute is derived from how differently they co-occur
// with the values of every other attribute; numeric attribute weights are the
// mean pairwise distance between their discretized bins.

#include <cstdint>
#include <string>
#include <vector>

#include "kmix/common.hpp"
#include "kmix/dataset.hpp"

namespace kmix {

// Symmetric X*X value-distance matrix with zero diagonal, entries in [0,1].
struct DeltaMatrix {
    int dim = 0;
    std::vector<double> values;  // row-major

    double at(int a, int b) const { return values[static_cast<std::size_t>(a) * dim + b]; }
    double& at(int a, int b) { return values[static_cast<std::size_t>(a) * dim + b]; }
};

struct DistanceModel {
    std::vector<DeltaMatrix> delta;  // per categorical attribute
    std::vector<double> weights;     // per numeric attribute, in [0,1]
    Discretization disc;
    std::vector<std::string> zero_support;  // diagnostics: value codes never seen in data
};

namespace detail {

// One coded column of the unified context view: all categorical columns
// followed by all binned numeric columns.
struct CodedColumn {
    const std::vector<std::int32_t>* codes = nullptr;
    int alphabet = 0;
};

inline std::vector<CodedColumn> context_view(const Dataset& ds, const Discretization& disc) {
    std::vector<CodedColumn> cols;
    for (int t = 0; t < ds.m_c(); ++t)
        cols.push_back({&ds.cat_cols[static_cast<std::size_t>(t)], ds.alphabet(t)});
    for (int t = 0; t < ds.m_r(); ++t)
        cols.push_back({&disc.codes[static_cast<std::size_t>(t)], disc.alphabet[static_cast<std::size_t>(t)]});
    return cols;
}

// Co-occurrence counts of a target column against one context column.
struct PairCounts {
    int xi = 0, xj = 0;
    std::vector<std::int64_t> counts;  // xi * xj
    std::vector<std::int64_t> totals;  // per target value

    std::int64_t at(int a, int v) const { return counts[static_cast<std::size_t>(a) * xj + v]; }
};

inline PairCounts count_pair(const CodedColumn& target, const CodedColumn& ctx, std::size_t n) {
    PairCounts pc;
    pc.xi = target.alphabet;
    pc.xj = ctx.alphabet;
    pc.counts.assign(static_cast<std::size_t>(pc.xi) * pc.xj, 0);
    pc.totals.assign(static_cast<std::size_t>(pc.xi), 0);
    for (std::size_t r = 0; r < n; ++r) {
        std::int32_t a = (*target.codes)[r];
        std::int32_t v = (*ctx.codes)[r];
        ++pc.counts[static_cast<std::size_t>(a) * pc.xj + v];
        ++pc.totals[static_cast<std::size_t>(a)];
    }
    return pc;
}

// Distance between target values a and b with respect to one context column:
// max over value subsets w of p(w|a) + p(~w|b) - 1. The maximizing w takes
// exactly the values with p(v|a) >= p(v|b), giving the closed form
// sum_v max(p(v|a), p(v|b)) - 1. Zero-support values yield 0.
inline double delta_wrt_counts(const PairCounts& pc, int a, int b, bool* zero_support = nullptr) {
    std::int64_t ta = pc.totals[static_cast<std::size_t>(a)];
    std::int64_t tb = pc.totals[static_cast<std::size_t>(b)];
    if (ta == 0 || tb == 0) {
        if (zero_support) *zero_support = true;
        return 0.0;
    }
    double sum = 0.0;
    for (int v = 0; v < pc.xj; ++v) {
        double pa = static_cast<double>(pc.at(a, v)) / static_cast<double>(ta);
        double pb = static_cast<double>(pc.at(b, v)) / static_cast<double>(tb);
        sum += std::max(pa, pb);
    }
    return std::clamp(sum - 1.0, 0.0, 1.0);
}

// Mean delta over every other context column, written into an xi*xi matrix.
inline DeltaMatrix delta_matrix_for(const std::vector<CodedColumn>& cols, int target, std::size_t n,
                                    std::vector<std::string>* zero_diag, const std::string& attr_name) {
    const int m = static_cast<int>(cols.size());
    require(m >= 2, errc::model, "distance model: need at least two attributes (m >= 2)");
    const int xi = cols[static_cast<std::size_t>(target)].alphabet;
    DeltaMatrix dm;
    dm.dim = xi;
    dm.values.assign(static_cast<std::size_t>(xi) * xi, 0.0);
    bool zero_support = false;
    for (int j = 0; j < m; ++j) {
        if (j == target) continue;
        PairCounts pc = count_pair(cols[static_cast<std::size_t>(target)], cols[static_cast<std::size_t>(j)], n);
        for (int a = 0; a < xi; ++a)
            for (int b = a + 1; b < xi; ++b) {
                double d = delta_wrt_counts(pc, a, b, &zero_support);
                dm.at(a, b) += d;
                dm.at(b, a) += d;
            }
    }
    const double inv = 1.0 / static_cast<double>(m - 1);
    for (double& v : dm.values) v *= inv;
    if (zero_support && zero_diag) zero_diag->push_back(attr_name);
    return dm;
}

inline double mean_offdiag(const DeltaMatrix& dm) {
    if (dm.dim < 2) return 0.0;
    std::int64_t pairs = 0;
    double sum = 0.0;
    for (int a = 0; a < dm.dim; ++a)
        for (int b = a + 1; b < dm.dim; ++b) {
            sum += dm.at(a, b);
            ++pairs;
        }
    return sum / static_cast<double>(pairs);
}

}  // namespace detail

// Granular single-value operations. attr indices address the unified context
// view: categorical attributes first, then binned numeric attributes.

inline double delta_wrt(const Dataset& ds, const Discretization& disc, int attr_i, int alpha, int beta,
                        int attr_j) {
    auto cols = detail::context_view(ds, disc);
    require(attr_i != attr_j, errc::parameter, "delta_wrt: context attribute must differ from target");
    require(alpha != beta, errc::parameter, "delta_wrt: values must differ");
    auto pc = detail::count_pair(cols[static_cast<std::size_t>(attr_i)], cols[static_cast<std::size_t>(attr_j)],
                                 ds.n);
    return detail::delta_wrt_counts(pc, alpha, beta);
}

inline double delta(const Dataset& ds, const Discretization& disc, int attr_i, int alpha, int beta) {
    if (alpha == beta) return 0.0;
    auto cols = detail::context_view(ds, disc);
    const int m = static_cast<int>(cols.size());
    require(m >= 2, errc::model, "delta: need at least two attributes (m >= 2)");
    double sum = 0.0;
    for (int j = 0; j < m; ++j) {
        if (j == attr_i) continue;
        auto pc = detail::count_pair(cols[static_cast<std::size_t>(attr_i)], cols[static_cast<std::size_t>(j)],
                                     ds.n);
        sum += detail::delta_wrt_counts(pc, alpha, beta);
    }
    return sum / static_cast<double>(m - 1);
}

inline double numeric_weight(const Dataset& ds, const Discretization& disc, int numeric_attr) {
    const int x = disc.alphabet[static_cast<std::size_t>(numeric_attr)];
    if (x <= 1) return 0.0;
    auto cols = detail::context_view(ds, disc);
    int target = ds.m_c() + numeric_attr;
    auto dm = detail::delta_matrix_for(cols, target, ds.n, nullptr, "");
    return detail::mean_offdiag(dm);
}

// Builds the full model: one delta matrix per categorical attribute and one
// weight per numeric attribute. Deterministic in the dataset content and
// invariant under row permutation (all inputs are counts).
inline DistanceModel build_model(const Dataset& ds, int bins) {
    DistanceModel model;
    model.disc = discretize(ds, bins);
    if (ds.m() >= 1) {
        auto cols = detail::context_view(ds, model.disc);
        for (int t = 0; t < ds.m_c(); ++t)
            model.delta.push_back(
                detail::delta_matrix_for(cols, t, ds.n, &model.zero_support, ds.cat_names[static_cast<std::size_t>(t)]));
        for (int t = 0; t < ds.m_r(); ++t) {
            if (model.disc.alphabet[static_cast<std::size_t>(t)] <= 1) {
                model.weights.push_back(0.0);
                continue;
            }
            auto dm = detail::delta_matrix_for(cols, ds.m_c() + t, ds.n, &model.zero_support,
                                               ds.numeric_names[static_cast<std::size_t>(t)]);
            model.weights.push_back(detail::mean_offdiag(dm));
        }
    }
    return model;
}

}  // namespace kmix
