#pragma once

// Deterministic initial-partition construction: one KMCMD run seeded per
// attribute (numeric attributes via equal-area standard-normal ranges,
// categorical attributes via their value groups), combined into a k-cluster
// consensus. A pure function of the dataset, the distance model and k.

#include <cmath>
#include <string>
#include <vector>

#include "kmix/codist.hpp"
#include "kmix/common.hpp"
#include "kmix/consensus.hpp"
#include "kmix/dataset.hpp"
#include "kmix/kmcmd.hpp"

namespace kmix {

inline double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

inline double std_normal_pdf(double z) {
    static const double inv_sqrt_2pi = 0.3989422804014326779;
    return inv_sqrt_2pi * std::exp(-0.5 * z * z);
}

// Inverse standard-normal CDF: Wichura's AS 241 rational approximation,
// polished with one Newton step against the erfc-based CDF. Absolute error
// well below 1e-9 over (0,1).
inline double std_normal_quantile(double p) {
    require(p > 0.0 && p < 1.0, errc::parameter, "std_normal_quantile: p must be in (0,1)");
    const double q = p - 0.5;
    double z;
    if (std::abs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        z = q *
            (((((((r * 2509.0809287301226727 + 33430.575583588128105) * r + 67265.770927008700853) * r +
                 45921.953931549871457) *
                    r +
                13731.693765509461125) *
                   r +
               1971.5909503065514427) *
                  r +
              133.14166789178437745) *
                 r +
             3.387132872796366608) /
            (((((((r * 5226.495278852854561 + 28729.085735721942674) * r + 39307.89580009271061) * r +
                 21213.794301586595867) *
                    r +
                5394.1960214247511077) *
                   r +
               687.1870074920579083) *
                  r +
              42.313330701600911252) *
                 r +
             1.0);
    } else {
        double r = q < 0.0 ? p : 1.0 - p;
        r = std::sqrt(-std::log(r));
        if (r <= 5.0) {
            r -= 1.6;
            z = (((((((r * 7.7454501427834140764e-4 + 0.0227238449892691845833) * r + 0.24178072517745061177) *
                         r +
                     1.27045825245236838258) *
                        r +
                    3.64784832476320460504) *
                       r +
                   5.7694972214606914055) *
                      r +
                  4.6303378461565452959) *
                     r +
                 1.42343711074968357734) /
                (((((((r * 1.05075007164441684324e-9 + 5.475938084995344946e-4) * r + 0.0151986665636164571966) *
                         r +
                     0.14810397642748007459) *
                        r +
                    0.68976733498510000455) *
                       r +
                   1.6763848301838038494) *
                      r +
                  2.05319162663775882187) *
                     r +
                 1.0);
        } else {
            r -= 5.0;
            z = (((((((r * 2.01033439929228813265e-7 + 2.71155556874348757815e-5) * r +
                      0.0012426609473880784386) *
                         r +
                     0.026532189526576123093) *
                        r +
                    0.29656057182850489123) *
                       r +
                   1.7848265399172913358) *
                      r +
                  5.4637849111641143699) *
                     r +
                 6.6579046435011037772) /
                (((((((r * 2.04426310338993978564e-15 + 1.4215117583164458887e-7) * r +
                      1.8463183175100546818e-5) *
                         r +
                     7.868691311456132591e-4) *
                        r +
                    0.0148753612908506148525) *
                       r +
                   0.13692988092273580531) *
                      r +
                  0.59983220655588793769) *
                     r +
                 1.0);
        }
        if (q < 0.0) z = -z;
    }
    z -= (std_normal_cdf(z) - p) / std_normal_pdf(z);
    return z;
}

// Groups rows of a numeric attribute into k ranges of equal standard-normal
// mass: z-score the column, cut at the j/k quantiles, boundary values go to
// the upper range.
inline Partition numeric_seed_partition(const Dataset& ds, int numeric_attr, int k) {
    require(k >= 1, errc::parameter, "numeric_seed_partition: k must be >= 1");
    const auto& col = ds.numeric_cols.at(static_cast<std::size_t>(numeric_attr));
    require(!col.empty(), errc::parameter, "numeric_seed_partition: empty column");
    double lo = *std::min_element(col.begin(), col.end());
    double hi = *std::max_element(col.begin(), col.end());
    require(lo != hi, errc::parameter, "numeric_seed_partition: constant column (sigma = 0)");

    const double mu = detail::stable_mean(col);
    std::vector<double> sq(col.size());
    for (std::size_t i = 0; i < col.size(); ++i) sq[i] = (col[i] - mu) * (col[i] - mu);
    const double sigma = std::sqrt(detail::stable_sum(std::move(sq)) / static_cast<double>(col.size()));

    std::vector<double> bounds;
    for (int j = 1; j < k; ++j) bounds.push_back(std_normal_quantile(static_cast<double>(j) / k));

    Partition part;
    part.k = k;
    part.labels.resize(col.size());
    for (std::size_t i = 0; i < col.size(); ++i) {
        double z = (col[i] - mu) / sigma;
        int lab = k - 1;
        for (int j = 0; j < k - 1; ++j)
            if (z < bounds[static_cast<std::size_t>(j)]) {
                lab = j;
                break;
            }
        part.labels[i] = lab;
    }
    return part;
}

// One cluster per attribute value; the cluster index is the canonical value
// code, so the cluster count is the attribute's alphabet size X (which may
// differ from the desired k).
inline Partition categorical_seed_partition(const Dataset& ds, int cat_attr) {
    Partition part;
    part.k = ds.alphabet(cat_attr);
    const auto& col = ds.cat_cols.at(static_cast<std::size_t>(cat_attr));
    part.labels.assign(col.begin(), col.end());
    return part;
}

struct AttributeRun {
    int schema_col = 0;
    std::string name;
    bool is_numeric = false;
    int seed_clusters = 0;  // k for numeric seeds, X for categorical seeds
    KmcmdResult result;
};

struct InitOutcome {
    std::vector<AttributeRun> runs;
    std::vector<std::string> skipped;  // constant numeric attributes
    std::vector<std::string> flagged;  // single-valued categorical attributes
    LabelMatrix label_matrix;
    Partition consensus;
    ConsensusMethod chosen = ConsensusMethod::hgpa;
    double anmi_hgpa = 0.0;
    double anmi_mcla = 0.0;
};

struct InitOptions {
    double balance = 1.2;
    KmcmdOptions kmcmd;
};

// Runs KMCMD once per usable attribute (k clusters for numeric seeds, X_i for
// categorical seeds), then reconciles the m label vectors to k clusters by
// consensus, selecting HGPA or MCLA by average NMI against the runs.
inline InitOutcome run_initkmix(const Dataset& ds, const DistanceModel& model, int k,
                                const InitOptions& opts = {}) {
    require(k >= 2, errc::parameter, "run_initkmix: k must be >= 2");
    require(static_cast<std::size_t>(k) <= ds.n, errc::parameter, "run_initkmix: k exceeds number of rows");

    InitOutcome out;
    for (const auto& attr : ds.attrs) {
        AttributeRun run;
        run.schema_col = attr.schema_col;
        run.is_numeric = attr.is_numeric;
        run.name = attr.is_numeric ? ds.numeric_names[static_cast<std::size_t>(attr.index)]
                                   : ds.cat_names[static_cast<std::size_t>(attr.index)];
        Partition seed;
        if (attr.is_numeric) {
            const auto& col = ds.numeric_cols[static_cast<std::size_t>(attr.index)];
            if (*std::min_element(col.begin(), col.end()) == *std::max_element(col.begin(), col.end())) {
                out.skipped.push_back(run.name);
                continue;
            }
            seed = numeric_seed_partition(ds, attr.index, k);
        } else {
            seed = categorical_seed_partition(ds, attr.index);
            if (seed.k == 1) out.flagged.push_back(run.name);
        }
        run.seed_clusters = seed.k;
        run.result = iterate(ds, model, seed, opts.kmcmd);
        out.label_matrix.add_run(run.result.partition.labels);
        out.runs.push_back(std::move(run));
    }
    require(!out.runs.empty(), errc::model, "run_initkmix: no usable seeding attribute");

    CombineResult comb = combine(out.label_matrix, k, opts.balance);
    out.consensus = std::move(comb.partition);
    out.chosen = comb.chosen;
    out.anmi_hgpa = comb.anmi_hgpa;
    out.anmi_mcla = comb.anmi_mcla;

    auto sizes = out.consensus.cluster_sizes();
    for (auto s : sizes) require(s > 0, errc::internal, "run_initkmix: consensus produced an empty cluster");
    return out;
}

}  // namespace kmix
