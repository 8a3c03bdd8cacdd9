#pragma once

// Cluster-ensemble consensus: combine m label vectors over the same objects
// into one k-cluster partition. Two routes are provided, both backed by the
// same deterministic balanced min-cut engine: HGPA partitions the objects of
// a hypergraph whose hyperedges are the clusters of every run; MCLA groups
// similar clusters into meta-clusters and assigns objects by strongest mean
// membership. Average NMI against the input runs picks the winner.

#include <bit>
#include <cmath>
#include <cstdint>
#include <queue>
#include <string>
#include <vector>

#include "kmix/common.hpp"

namespace kmix {

struct LabelMatrix {
    std::size_t n = 0;
    std::vector<std::vector<int>> runs;
    std::vector<int> ks;  // clusters per run, labels dense in [0, ks[r])

    // Adds a run, densifying labels by sorted distinct value (canonical and
    // independent of row order).
    void add_run(const std::vector<int>& labels) {
        if (runs.empty())
            n = labels.size();
        else
            require(labels.size() == n, errc::parameter, "label matrix: runs must have equal length");
        std::vector<int> distinct(labels.begin(), labels.end());
        std::sort(distinct.begin(), distinct.end());
        distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
        std::vector<int> dense(labels.size());
        for (std::size_t i = 0; i < labels.size(); ++i)
            dense[i] = static_cast<int>(std::lower_bound(distinct.begin(), distinct.end(), labels[i]) -
                                        distinct.begin());
        runs.push_back(std::move(dense));
        ks.push_back(static_cast<int>(distinct.size()));
    }

    int m() const { return static_cast<int>(runs.size()); }
};

// Normalized mutual information between two label vectors, geometric-mean
// normalization. Conventions: 0*log0 = 0; when either labeling has zero
// entropy the value is 1 if the two are identical as set partitions, else 0.
inline double nmi(const std::vector<int>& a, const std::vector<int>& b) {
    require(a.size() == b.size(), errc::parameter, "nmi: length mismatch");
    require(!a.empty(), errc::parameter, "nmi: empty labelings");
    const std::size_t n = a.size();
    int ka = *std::max_element(a.begin(), a.end()) + 1;
    int kb = *std::max_element(b.begin(), b.end()) + 1;
    std::vector<std::int64_t> cont(static_cast<std::size_t>(ka) * kb, 0);
    std::vector<std::int64_t> ra(static_cast<std::size_t>(ka), 0), rb(static_cast<std::size_t>(kb), 0);
    for (std::size_t i = 0; i < n; ++i) {
        ++cont[static_cast<std::size_t>(a[i]) * kb + b[i]];
        ++ra[static_cast<std::size_t>(a[i])];
        ++rb[static_cast<std::size_t>(b[i])];
    }
    const double dn = static_cast<double>(n);
    double ha = 0.0, hb = 0.0;
    for (std::int64_t c : ra)
        if (c > 0) ha -= (c / dn) * std::log(c / dn);
    for (std::int64_t c : rb)
        if (c > 0) hb -= (c / dn) * std::log(c / dn);
    if (ha <= 0.0 || hb <= 0.0) return same_set_partition(a, b) ? 1.0 : 0.0;
    double mi = 0.0;
    for (int i = 0; i < ka; ++i)
        for (int j = 0; j < kb; ++j) {
            std::int64_t c = cont[static_cast<std::size_t>(i) * kb + j];
            if (c == 0) continue;
            double pij = c / dn;
            mi += pij * std::log(pij * dn * dn / (static_cast<double>(ra[static_cast<std::size_t>(i)]) *
                                                  static_cast<double>(rb[static_cast<std::size_t>(j)])));
        }
    return std::clamp(mi / std::sqrt(ha * hb), 0.0, 1.0);
}

inline double nmi(const Partition& a, const Partition& b) { return nmi(a.labels, b.labels); }

// Average NMI of a candidate consensus against every input run.
inline double anmi(const std::vector<int>& candidate, const LabelMatrix& lm) {
    require(lm.m() >= 1, errc::parameter, "anmi: empty label matrix");
    double sum = 0.0;
    for (const auto& run : lm.runs) sum += nmi(candidate, run);
    return sum / static_cast<double>(lm.m());
}

inline double anmi(const Partition& candidate, const LabelMatrix& lm) { return anmi(candidate.labels, lm); }

namespace detail {

struct WeightedHypergraph {
    int n = 0;
    std::vector<std::vector<int>> edges;  // vertex ids
    std::vector<double> weights;
    std::vector<std::vector<int>> incident;  // per vertex: edge ids

    void finalize() {
        incident.assign(static_cast<std::size_t>(n), {});
        for (std::size_t e = 0; e < edges.size(); ++e)
            for (int v : edges[e]) incident[static_cast<std::size_t>(v)].push_back(static_cast<int>(e));
    }
};

// Deterministic balanced k-way min-cut over weighted hyperedges. Parts are
// grown greedily from canonical seeds to near-equal sizes, then improved by
// Fiduccia-Mattheyses passes (tentative single-vertex moves with rollback to
// the best prefix). Part sizes stay in [1, ceil(balance*n/k)]. `order` fixes
// every tie: earlier vertices win.
class BalancedPartitioner {
public:
    BalancedPartitioner(const WeightedHypergraph& g, int k, double balance, std::vector<int> order)
        : g_(g), k_(k), order_(std::move(order)) {
        require(k_ >= 1 && k_ <= g_.n, errc::parameter, "partition: need 1 <= k <= n");
        max_size_ = static_cast<int>(std::ceil(balance * g_.n / k_));
        max_size_ = std::max(max_size_, (g_.n + k_ - 1) / k_);
        pos_.assign(static_cast<std::size_t>(g_.n), 0);
        for (int i = 0; i < g_.n; ++i) pos_[static_cast<std::size_t>(order_[static_cast<std::size_t>(i)])] = i;
    }

    // Tiny instances are solved exactly; larger ones take the best of three
    // deterministic greedy+FM starts (given order, reversed, rotated), ties
    // to the earliest start.
    std::vector<int> run(int fm_passes) {
        if (g_.n <= 10 || (k_ == 2 && g_.n <= 16)) return exact();
        const std::vector<int> base_order = order_;
        std::vector<int> best_part;
        double best_cut = std::numeric_limits<double>::infinity();
        for (int start = 0; start < 3; ++start) {
            order_ = base_order;
            if (start == 1) {
                std::reverse(order_.begin(), order_.end());
            } else if (start == 2) {
                std::rotate(order_.begin(), order_.begin() + g_.n / 2, order_.end());
            }
            for (int i = 0; i < g_.n; ++i) pos_[static_cast<std::size_t>(order_[static_cast<std::size_t>(i)])] = i;
            grow();
            init_counts();
            for (int pass = 0; pass < fm_passes; ++pass)
                if (!fm_pass()) break;
            if (cut_ < best_cut - 1e-12) {
                best_cut = cut_;
                best_part = part_;
            }
        }
        part_ = std::move(best_part);
        cut_ = best_cut;
        return part_;
    }

    double cut() const { return cut_; }

private:
    const WeightedHypergraph& g_;
    int k_;
    int max_size_ = 0;
    std::vector<int> order_, pos_;
    std::vector<int> part_;
    std::vector<int> sizes_;
    std::vector<std::vector<int>> cnt_;  // per edge: vertices per part
    std::vector<int> span_;              // per edge: parts touched
    double cut_ = 0.0;

    // Tiny instances are solved exactly: enumerate set partitions in
    // restricted-growth order (vertices taken in tie order, so equal-cut
    // optima resolve canonically), pruning oversized parts. The first minimal
    // cut wins.
    std::vector<int> exact() {
        const int n = g_.n;
        std::vector<int> assign(static_cast<std::size_t>(n), -1);  // by order position
        std::vector<int> best_assign;
        std::vector<int> sizes(static_cast<std::size_t>(k_), 0);
        double best_cut = std::numeric_limits<double>::infinity();

        auto eval_cut = [&]() {
            double cut = 0.0;
            for (std::size_t e = 0; e < g_.edges.size(); ++e) {
                std::uint32_t mask = 0;
                for (int v : g_.edges[e]) mask |= 1u << assign[static_cast<std::size_t>(pos_[static_cast<std::size_t>(v)])];
                if ((mask & (mask - 1)) != 0) cut += g_.weights[e];
            }
            return cut;
        };

        auto rec = [&](auto&& self, int i, int blocks) -> void {
            if (i == n) {
                if (blocks != k_) return;
                double cut = eval_cut();
                if (cut < best_cut) {
                    best_cut = cut;
                    best_assign = assign;
                }
                return;
            }
            if (blocks + (n - i) < k_) return;  // not enough vertices left to open k parts
            const int limit = std::min(blocks, k_ - 1);
            for (int p = 0; p <= limit; ++p) {
                if (sizes[static_cast<std::size_t>(p)] >= max_size_) continue;
                assign[static_cast<std::size_t>(i)] = p;
                ++sizes[static_cast<std::size_t>(p)];
                self(self, i + 1, std::max(blocks, p + 1));
                --sizes[static_cast<std::size_t>(p)];
            }
        };
        rec(rec, 0, 0);
        require(!best_assign.empty(), errc::internal, "partition: exact search found no feasible partition");

        part_.assign(static_cast<std::size_t>(n), 0);
        for (int i = 0; i < n; ++i)
            part_[static_cast<std::size_t>(order_[static_cast<std::size_t>(i)])] = best_assign[static_cast<std::size_t>(i)];
        cut_ = best_cut;
        return part_;
    }

    void grow() {
        const int n = g_.n;
        part_.assign(static_cast<std::size_t>(n), -1);
        sizes_.assign(static_cast<std::size_t>(k_), 0);
        std::vector<double> gain(static_cast<std::size_t>(n), 0.0);
        std::vector<int> gain_epoch(static_cast<std::size_t>(n), -1);
        std::vector<int> edge_epoch(g_.edges.size(), -1);

        int base = n / k_, rem = n % k_;
        std::size_t scan = 0;
        for (int p = 0; p < k_; ++p) {
            const int target = base + (p < rem ? 1 : 0);
            // max-heap of (gain, pos): lazy entries, gains only grow.
            using Entry = std::pair<double, int>;  // (gain, pos)
            std::priority_queue<Entry> heap;
            auto cur_gain = [&](int v) {
                return gain_epoch[static_cast<std::size_t>(v)] == p ? gain[static_cast<std::size_t>(v)] : 0.0;
            };
            int size = 0;
            while (size < target) {
                int v = -1;
                while (!heap.empty()) {
                    auto [negg, negpos] = heap.top();
                    int cand = order_[static_cast<std::size_t>(-negpos)];
                    if (part_[static_cast<std::size_t>(cand)] != -1 || cur_gain(cand) != negg) {
                        heap.pop();
                        continue;
                    }
                    v = cand;
                    heap.pop();
                    break;
                }
                if (v < 0) {
                    while (scan < static_cast<std::size_t>(n) &&
                           part_[static_cast<std::size_t>(order_[scan])] != -1)
                        ++scan;
                    require(scan < static_cast<std::size_t>(n), errc::internal, "partition: ran out of vertices");
                    v = order_[scan];
                }
                part_[static_cast<std::size_t>(v)] = p;
                ++size;
                for (int e : g_.incident[static_cast<std::size_t>(v)]) {
                    if (edge_epoch[static_cast<std::size_t>(e)] == p) continue;
                    edge_epoch[static_cast<std::size_t>(e)] = p;
                    for (int u : g_.edges[static_cast<std::size_t>(e)]) {
                        if (part_[static_cast<std::size_t>(u)] != -1) continue;
                        if (gain_epoch[static_cast<std::size_t>(u)] != p) {
                            gain_epoch[static_cast<std::size_t>(u)] = p;
                            gain[static_cast<std::size_t>(u)] = 0.0;
                        }
                        gain[static_cast<std::size_t>(u)] += g_.weights[static_cast<std::size_t>(e)];
                        heap.emplace(gain[static_cast<std::size_t>(u)], -pos_[static_cast<std::size_t>(u)]);
                    }
                }
            }
            sizes_[static_cast<std::size_t>(p)] = size;
        }
    }

    void init_counts() {
        cnt_.assign(g_.edges.size(), std::vector<int>(static_cast<std::size_t>(k_), 0));
        span_.assign(g_.edges.size(), 0);
        cut_ = 0.0;
        for (std::size_t e = 0; e < g_.edges.size(); ++e) {
            for (int v : g_.edges[e]) ++cnt_[e][static_cast<std::size_t>(part_[static_cast<std::size_t>(v)])];
            int span = 0;
            for (int p = 0; p < k_; ++p)
                if (cnt_[e][static_cast<std::size_t>(p)] > 0) ++span;
            span_[e] = span;
            if (span > 1) cut_ += g_.weights[e];
        }
    }

    // Gain of moving v to its best legal target. Returns false if no move is
    // legal (source would empty or all targets full).
    bool best_move(int v, double& gain_out, int& target_out) const {
        const int from = part_[static_cast<std::size_t>(v)];
        if (sizes_[static_cast<std::size_t>(from)] <= 1) return false;
        bool found = false;
        for (int t = 0; t < k_; ++t) {
            if (t == from || sizes_[static_cast<std::size_t>(t)] >= max_size_) continue;
            double gain = 0.0;
            for (int e : g_.incident[static_cast<std::size_t>(v)]) {
                const auto& cnt = cnt_[static_cast<std::size_t>(e)];
                int span_after = span_[static_cast<std::size_t>(e)];
                if (cnt[static_cast<std::size_t>(from)] == 1) --span_after;
                if (cnt[static_cast<std::size_t>(t)] == 0) ++span_after;
                const bool cut_before = span_[static_cast<std::size_t>(e)] > 1;
                const bool cut_after = span_after > 1;
                if (cut_before != cut_after)
                    gain += cut_before ? g_.weights[static_cast<std::size_t>(e)]
                                       : -g_.weights[static_cast<std::size_t>(e)];
            }
            if (!found || gain > gain_out) {
                found = true;
                gain_out = gain;
                target_out = t;
            }
        }
        return found;
    }

    void apply_move(int v, int to) {
        const int from = part_[static_cast<std::size_t>(v)];
        for (int e : g_.incident[static_cast<std::size_t>(v)]) {
            auto& cnt = cnt_[static_cast<std::size_t>(e)];
            const bool was_cut = span_[static_cast<std::size_t>(e)] > 1;
            if (--cnt[static_cast<std::size_t>(from)] == 0) --span_[static_cast<std::size_t>(e)];
            if (cnt[static_cast<std::size_t>(to)]++ == 0) ++span_[static_cast<std::size_t>(e)];
            const bool is_cut = span_[static_cast<std::size_t>(e)] > 1;
            if (was_cut != is_cut) cut_ += is_cut ? g_.weights[static_cast<std::size_t>(e)]
                                                  : -g_.weights[static_cast<std::size_t>(e)];
        }
        part_[static_cast<std::size_t>(v)] = to;
        --sizes_[static_cast<std::size_t>(from)];
        ++sizes_[static_cast<std::size_t>(to)];
    }

    bool fm_pass() {
        struct Move {
            int v, from, to;
        };
        std::vector<char> locked(static_cast<std::size_t>(g_.n), 0);
        std::vector<Move> moves;
        const double start_cut = cut_;
        double best_cut = cut_;
        std::size_t best_prefix = 0;

        // max-heap over (gain, pos asc, target asc); entries go stale as
        // neighbors move and are refreshed on pop.
        struct Entry {
            double gain;
            int pos, target, v;
            bool operator<(const Entry& o) const {
                if (gain != o.gain) return gain < o.gain;
                if (pos != o.pos) return pos > o.pos;
                return target > o.target;
            }
        };
        std::priority_queue<Entry> heap;
        for (int i = 0; i < g_.n; ++i) {
            int v = order_[static_cast<std::size_t>(i)];
            double gain;
            int target;
            if (best_move(v, gain, target)) heap.push({gain, i, target, v});
        }
        long budget = 8L * g_.n + 64;
        while (budget-- > 0 && !heap.empty()) {
            Entry e = heap.top();
            heap.pop();
            if (locked[static_cast<std::size_t>(e.v)]) continue;
            double gain;
            int target;
            if (!best_move(e.v, gain, target)) continue;
            if (gain != e.gain || target != e.target) {
                heap.push({gain, e.pos, target, e.v});
                continue;
            }
            Move mv{e.v, part_[static_cast<std::size_t>(e.v)], target};
            apply_move(e.v, target);
            locked[static_cast<std::size_t>(e.v)] = 1;
            moves.push_back(mv);
            if (cut_ < best_cut - 1e-12) {
                best_cut = cut_;
                best_prefix = moves.size();
            }
        }
        for (std::size_t i = moves.size(); i > best_prefix; --i)
            apply_move(moves[i - 1].v, moves[i - 1].from);
        return best_cut < start_cut - 1e-12;
    }
};

inline std::vector<std::uint64_t> member_bits(const std::vector<int>& labels, int cluster, std::size_t n) {
    std::vector<std::uint64_t> bits((n + 63) / 64, 0);
    for (std::size_t i = 0; i < n; ++i)
        if (labels[i] == cluster) bits[i >> 6] |= (1ull << (i & 63));
    return bits;
}

}  // namespace detail

// Consensus by balanced min-cut partitioning of the cluster hypergraph.
inline Partition hgpa(const LabelMatrix& lm, int k, double balance = 1.2) {
    require(lm.m() >= 1, errc::parameter, "hgpa: empty label matrix");
    require(k >= 1 && static_cast<std::size_t>(k) <= lm.n, errc::parameter, "hgpa: need 1 <= k <= n");
    const std::size_t n = lm.n;

    detail::WeightedHypergraph g;
    g.n = static_cast<int>(n);
    for (int r = 0; r < lm.m(); ++r)
        for (int c = 0; c < lm.ks[static_cast<std::size_t>(r)]; ++c) {
            std::vector<int> edge;
            for (std::size_t i = 0; i < n; ++i)
                if (lm.runs[static_cast<std::size_t>(r)][i] == c) edge.push_back(static_cast<int>(i));
            g.edges.push_back(std::move(edge));
            g.weights.push_back(1.0);
        }
    g.finalize();

    // Tie order: label signature across runs (row-order invariant), then index.
    std::vector<int> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        for (int r = 0; r < lm.m(); ++r) {
            int la = lm.runs[static_cast<std::size_t>(r)][static_cast<std::size_t>(a)];
            int lb = lm.runs[static_cast<std::size_t>(r)][static_cast<std::size_t>(b)];
            if (la != lb) return la < lb;
        }
        return a < b;
    });

    detail::BalancedPartitioner solver(g, k, balance, std::move(order));
    Partition part;
    part.labels = solver.run(3);
    part.k = k;
    part.validate(n);
    return part;
}

// Consensus by meta-clustering: clusters of all runs become meta-vertices
// joined by Jaccard similarity, the meta-graph is partitioned into k balanced
// meta-clusters, and each object goes to the meta-cluster with the highest
// mean membership over its constituent clusters.
inline Partition mcla(const LabelMatrix& lm, int k, double balance = 1.2) {
    require(lm.m() >= 1, errc::parameter, "mcla: empty label matrix");
    require(k >= 1 && static_cast<std::size_t>(k) <= lm.n, errc::parameter, "mcla: need 1 <= k <= n");
    const std::size_t n = lm.n;

    int meta_n = 0;
    for (int kr : lm.ks) meta_n += kr;
    require(meta_n >= k, errc::parameter, "mcla: fewer clusters across runs than k");

    std::vector<std::vector<std::uint64_t>> bits;
    std::vector<std::int64_t> sizes;
    for (int r = 0; r < lm.m(); ++r)
        for (int c = 0; c < lm.ks[static_cast<std::size_t>(r)]; ++c) {
            bits.push_back(detail::member_bits(lm.runs[static_cast<std::size_t>(r)], c, n));
            std::int64_t sz = 0;
            for (auto w : bits.back()) sz += std::popcount(w);
            sizes.push_back(sz);
        }

    detail::WeightedHypergraph g;
    g.n = meta_n;
    for (int i = 0; i < meta_n; ++i)
        for (int j = i + 1; j < meta_n; ++j) {
            std::int64_t inter = 0;
            for (std::size_t w = 0; w < bits[static_cast<std::size_t>(i)].size(); ++w)
                inter += std::popcount(bits[static_cast<std::size_t>(i)][w] & bits[static_cast<std::size_t>(j)][w]);
            std::int64_t uni = sizes[static_cast<std::size_t>(i)] + sizes[static_cast<std::size_t>(j)] - inter;
            if (inter == 0 || uni == 0) continue;
            g.edges.push_back({i, j});
            g.weights.push_back(static_cast<double>(inter) / static_cast<double>(uni));
        }
    g.finalize();

    std::vector<int> order(static_cast<std::size_t>(meta_n));
    for (int i = 0; i < meta_n; ++i) order[static_cast<std::size_t>(i)] = i;
    detail::BalancedPartitioner solver(g, k, balance, std::move(order));
    std::vector<int> meta_part = solver.run(3);

    // Mean membership of each object in each meta-cluster.
    std::vector<int> meta_sizes(static_cast<std::size_t>(k), 0);
    for (int mp : meta_part) ++meta_sizes[static_cast<std::size_t>(mp)];
    std::vector<double> assoc(n * static_cast<std::size_t>(k), 0.0);
    {
        int meta_id = 0;
        for (int r = 0; r < lm.m(); ++r) {
            const auto& run = lm.runs[static_cast<std::size_t>(r)];
            std::vector<int> cluster_part(static_cast<std::size_t>(lm.ks[static_cast<std::size_t>(r)]));
            for (int c = 0; c < lm.ks[static_cast<std::size_t>(r)]; ++c)
                cluster_part[static_cast<std::size_t>(c)] = meta_part[static_cast<std::size_t>(meta_id++)];
            for (std::size_t i = 0; i < n; ++i)
                assoc[i * static_cast<std::size_t>(k) + cluster_part[static_cast<std::size_t>(run[i])]] += 1.0;
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        for (int p = 0; p < k; ++p)
            assoc[i * static_cast<std::size_t>(k) + p] /= static_cast<double>(meta_sizes[static_cast<std::size_t>(p)]);

    Partition part;
    part.k = k;
    part.labels.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        int best = 0;
        double best_assoc = assoc[i * static_cast<std::size_t>(k)];
        for (int p = 1; p < k; ++p) {
            double a = assoc[i * static_cast<std::size_t>(k) + p];
            if (a > best_assoc) {
                best_assoc = a;
                best = p;
            }
        }
        part.labels[i] = best;
    }

    // Repair empty object clusters by stealing the strongest-associated
    // object whose source keeps at least one member.
    auto cluster_sizes = part.cluster_sizes();
    for (int p = 0; p < k; ++p) {
        if (cluster_sizes[static_cast<std::size_t>(p)] > 0) continue;
        std::size_t best_obj = n;
        double best_assoc = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (cluster_sizes[static_cast<std::size_t>(part.labels[i])] < 2) continue;
            double a = assoc[i * static_cast<std::size_t>(k) + p];
            if (a > best_assoc) {
                best_assoc = a;
                best_obj = i;
            }
        }
        require(best_obj < n, errc::internal, "mcla: cannot repair empty meta-cluster");
        --cluster_sizes[static_cast<std::size_t>(part.labels[best_obj])];
        part.labels[best_obj] = p;
        ++cluster_sizes[static_cast<std::size_t>(p)];
    }
    part.validate(n);
    return part;
}

enum class ConsensusMethod { hgpa, mcla };

inline const char* to_string(ConsensusMethod m) { return m == ConsensusMethod::hgpa ? "HGPA" : "MCLA"; }

struct CombineResult {
    Partition partition;
    ConsensusMethod chosen = ConsensusMethod::hgpa;
    double anmi_hgpa = 0.0;
    double anmi_mcla = 0.0;
};

// Runs both consensus methods and keeps the one with the higher average NMI
// against the input runs; ties go to HGPA.
inline CombineResult combine(const LabelMatrix& lm, int k, double balance = 1.2) {
    CombineResult res;
    Partition h = hgpa(lm, k, balance);
    Partition m = mcla(lm, k, balance);
    res.anmi_hgpa = anmi(h, lm);
    res.anmi_mcla = anmi(m, lm);
    if (res.anmi_hgpa >= res.anmi_mcla) {
        res.partition = std::move(h);
        res.chosen = ConsensusMethod::hgpa;
    } else {
        res.partition = std::move(m);
        res.chosen = ConsensusMethod::mcla;
    }
    return res;
}

}  // namespace kmix
