#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace kmix {

// Error categories, mapped to distinct CLI exit codes.
enum class errc { io, schema, parameter, model, internal };

class error : public std::runtime_error {
public:
    error(errc kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    errc kind() const { return kind_; }

private:
    errc kind_;
};

[[noreturn]] inline void fail(errc kind, const std::string& msg) { throw error(kind, msg); }

inline void require(bool cond, errc kind, const std::string& msg) {
    if (!cond) fail(kind, msg);
}

// Assignment of n rows to cluster labels in [0, k). The currency between
// seeding, consensus, clustering and metrics.
struct Partition {
    std::vector<int> labels;
    int k = 0;

    std::size_t size() const { return labels.size(); }

    void validate(std::size_t n) const {
        require(k >= 1, errc::parameter, "partition: k must be >= 1");
        require(labels.size() == n, errc::parameter, "partition: label count does not match dataset");
        for (int lab : labels)
            require(lab >= 0 && lab < k, errc::parameter, "partition: label out of range [0, k)");
    }

    std::vector<std::size_t> cluster_sizes() const {
        std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
        for (int lab : labels) ++sizes[static_cast<std::size_t>(lab)];
        return sizes;
    }
};

// True when a and b induce the same grouping of indices, ignoring label names.
inline bool same_set_partition(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size()) return false;
    std::vector<int> fwd(a.size(), -1), bwd(b.size(), -1);
    int next_a = 0, next_b = 0;
    std::vector<int> ca(a.size()), cb(b.size());
    auto canon = [](const std::vector<int>& v, std::vector<int>& out, std::vector<int>& map, int& next) {
        for (std::size_t i = 0; i < v.size(); ++i) {
            int lab = v[i];
            if (lab >= static_cast<int>(map.size())) map.resize(static_cast<std::size_t>(lab) + 1, -1);
            if (map[static_cast<std::size_t>(lab)] < 0) map[static_cast<std::size_t>(lab)] = next++;
            out[i] = map[static_cast<std::size_t>(lab)];
        }
    };
    canon(a, ca, fwd, next_a);
    canon(b, cb, bwd, next_b);
    return ca == cb;
}

namespace detail {

// Sum that depends only on the multiset of addends, not their order: sort by
// value, then Neumaier-compensated accumulation.
inline double stable_sum(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    double sum = 0.0, comp = 0.0;
    for (double x : v) {
        double t = sum + x;
        if (std::abs(sum) >= std::abs(x))
            comp += (sum - t) + x;
        else
            comp += (x - t) + sum;
        sum = t;
    }
    return sum + comp;
}

inline double stable_mean(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    if (std::all_of(v.begin(), v.end(), [&](double x) { return x == v[0]; })) return v[0];
    return stable_sum(v) / static_cast<double>(v.size());
}

// Population standard deviation (divide by N). Exactly 0 for a constant
// sample, whatever rounding the mean picked up.
inline double stable_stddev(const std::vector<double>& v, double mean) {
    if (v.empty()) return 0.0;
    if (std::all_of(v.begin(), v.end(), [&](double x) { return x == v[0]; })) return 0.0;
    std::vector<double> sq(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) sq[i] = (v[i] - mean) * (v[i] - mean);
    return std::sqrt(stable_sum(std::move(sq)) / static_cast<double>(v.size()));
}

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

}  // namespace detail

}  // namespace kmix
