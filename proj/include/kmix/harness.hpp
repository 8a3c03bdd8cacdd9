#pragma once

// Experiment harness: end-to-end pipeline runs (deterministic seeding vs the
// seeded random-partition baseline), per-attribute analysis, manifest-driven
// experiment grids, and the report / label-file formats used by the CLI.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "kmix/codist.hpp"
#include "kmix/common.hpp"
#include "kmix/consensus.hpp"
#include "kmix/dataset.hpp"
#include "kmix/initkmix.hpp"
#include "kmix/kmcmd.hpp"
#include "kmix/metrics.hpp"

namespace kmix {

// Counter-based generator over splitmix64: the same seed always yields the
// same sequence on every platform, and per-run streams are split off the base
// seed by run index.
struct SeededRng {
    std::uint64_t state = 0;
    std::uint64_t counter = 0;

    explicit SeededRng(std::uint64_t seed) : state(seed) {}

    SeededRng split(std::uint64_t stream) const {
        std::uint64_t s = state ^ (0x632BE59BD9B4E019ull * (stream + 1));
        return SeededRng(detail::splitmix64(s));
    }

    std::uint64_t next() {
        ++counter;
        return detail::splitmix64(state);
    }

    // Unbiased integer in [0, bound) by rejection.
    std::uint32_t uniform(std::uint32_t bound) {
        require(bound > 0, errc::parameter, "rng: bound must be positive");
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t x;
        do {
            x = next();
        } while (x >= limit);
        return static_cast<std::uint32_t>(x % bound);
    }
};

inline Partition random_partition(std::size_t n, int k, SeededRng& rng) {
    require(k >= 1 && static_cast<std::size_t>(k) <= n, errc::parameter, "random_partition: need 1 <= k <= n");
    Partition part;
    part.k = k;
    part.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) part.labels[i] = static_cast<int>(rng.uniform(static_cast<std::uint32_t>(k)));
    return part;
}

struct PipelineOptions {
    int bins = 0;  // 0 = auto: max(k, 4)
    double balance = 1.2;
    KmcmdOptions kmcmd;
};

inline int effective_bins(int bins, int k) { return bins > 0 ? bins : std::max(k, 4); }

struct PipelineResult {
    InitOutcome init;
    KmcmdResult final_run;
    double seconds = 0.0;
};

// Full deterministic pipeline: distance model, per-attribute seeded runs,
// consensus, then KMCMD from the consensus partition.
inline PipelineResult run_pipeline(const Dataset& ds, const DistanceModel& model, int k,
                                   const PipelineOptions& opts = {}) {
    auto t0 = std::chrono::steady_clock::now();
    PipelineResult res;
    InitOptions init_opts;
    init_opts.balance = opts.balance;
    init_opts.kmcmd = opts.kmcmd;
    res.init = run_initkmix(ds, model, k, init_opts);
    res.final_run = iterate(ds, model, res.init.consensus, opts.kmcmd);
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

struct BaselineRun {
    KmcmdResult result;
    double ac = -1.0;  // -1 when no ground truth
    double seconds = 0.0;
};

inline std::vector<BaselineRun> run_random_baseline(const Dataset& ds, const DistanceModel& model, int k,
                                                    std::uint64_t seed, int repeats,
                                                    const PipelineOptions& opts = {}) {
    require(repeats >= 1, errc::parameter, "baseline: repeats must be >= 1");
    std::vector<BaselineRun> runs;
    SeededRng base(seed);
    for (int r = 0; r < repeats; ++r) {
        auto t0 = std::chrono::steady_clock::now();
        SeededRng rng = base.split(static_cast<std::uint64_t>(r));
        Partition init = random_partition(ds.n, k, rng);
        BaselineRun br;
        br.result = iterate(ds, model, init, opts.kmcmd);
        if (ds.ground_truth) br.ac = accuracy(br.result.partition, *ds.ground_truth).ac;
        br.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        runs.push_back(std::move(br));
    }
    return runs;
}

struct RunReport {
    std::string dataset_id;
    std::string method;  // "initkmix" | "random"
    int k = 0;
    int bins = 0;
    std::uint64_t seed = 0;
    int repeats = 1;
    std::vector<double> acs;
    double mean_ac = -1.0;
    double sd_ac = -1.0;
    std::string chosen_consensus;
    double anmi_hgpa = 0.0, anmi_mcla = 0.0;
    std::vector<int> iterations;
    std::vector<double> seconds;
    Preprocess prep;
    std::size_t n = 0;
    int m_r = 0, m_c = 0;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["dataset"] = dataset_id;
        j["method"] = method;
        j["k"] = k;
        j["bins"] = bins;
        j["n"] = n;
        j["m_r"] = m_r;
        j["m_c"] = m_c;
        if (method == "random") {
            j["seed"] = seed;
            j["repeats"] = repeats;
        }
        if (!acs.empty()) {
            j["ac"] = acs;
            j["mean_ac"] = mean_ac;
            j["sd_ac"] = sd_ac;
        }
        if (!chosen_consensus.empty()) {
            j["consensus"] = chosen_consensus;
            j["anmi"] = {{"hgpa", anmi_hgpa}, {"mcla", anmi_mcla}};
        }
        j["iterations"] = iterations;
        j["seconds"] = seconds;
        nlohmann::json prep_json;
        prep_json["missing_token"] = prep.missing_token;
        prep_json["normalized"] = prep.normalized;
        prep_json["imputed_numeric"] = prep.imputed_numeric;
        prep_json["missing_categorical"] = prep.missing_categorical;
        nlohmann::json norms = nlohmann::json::array();
        for (const auto& p : prep.norm)
            norms.push_back({{"min", p.min}, {"max", p.max}, {"constant", p.constant}});
        prep_json["minmax"] = norms;
        j["preprocessing"] = prep_json;
        return j;
    }
};

inline void write_labels(const std::string& path, const std::vector<int>& labels) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), errc::io, "cannot write label file: " + path);
    for (int lab : labels) out << lab << '\n';
    require(out.good(), errc::io, "failed writing label file: " + path);
}

inline std::vector<int> read_labels(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), errc::io, "cannot open label file: " + path);
    std::vector<int> labels;
    std::string line;
    while (std::getline(in, line)) {
        line = detail::trim(line);
        if (line.empty()) continue;
        try {
            labels.push_back(std::stoi(line));
        } catch (const std::exception&) {
            fail(errc::io, path + ": cannot parse label '" + line + "'");
        }
    }
    return labels;
}

// Label-matrix CSV: one row per object, one column per run. A first line
// that does not parse as integers is treated as a header and skipped.
inline LabelMatrix read_label_matrix(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), errc::io, "cannot open label matrix: " + path);
    std::vector<std::vector<int>> columns;
    std::string line;
    std::size_t lineno = 0;
    bool first_data = true;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (detail::trim(line).empty()) continue;
        auto fields = detail::split_csv(line);
        std::vector<int> row;
        bool ok = true;
        for (const auto& f : fields) {
            try {
                row.push_back(std::stoi(f));
            } catch (const std::exception&) {
                ok = false;
                break;
            }
        }
        if (!ok) {
            require(first_data, errc::io, path + ": row " + std::to_string(lineno) + ": non-integer label");
            continue;  // header
        }
        first_data = false;
        if (columns.empty()) columns.assign(row.size(), {});
        require(row.size() == columns.size(), errc::io,
                path + ": row " + std::to_string(lineno) + ": ragged label matrix");
        for (std::size_t c = 0; c < row.size(); ++c) columns[c].push_back(row[c]);
    }
    require(!columns.empty() && !columns[0].empty(), errc::io, path + ": empty label matrix");
    LabelMatrix lm;
    for (auto& col : columns) lm.add_run(col);
    return lm;
}

inline void write_label_matrix(const std::string& path, const InitOutcome& outcome) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), errc::io, "cannot write label matrix: " + path);
    for (std::size_t r = 0; r < outcome.runs.size(); ++r)
        out << (r ? "," : "") << outcome.runs[r].name;
    out << '\n';
    for (std::size_t i = 0; i < outcome.label_matrix.n; ++i) {
        for (std::size_t r = 0; r < outcome.label_matrix.runs.size(); ++r)
            out << (r ? "," : "") << outcome.label_matrix.runs[r][i];
        out << '\n';
    }
}

struct ManifestRow {
    std::string id;
    std::string csv_path;
    std::string schema_path;
    int k = 0;  // 0 = from schema / class count
};

// Manifest: CSV rows "id,csv_path,schema_path[,k]"; '#' comments allowed.
// Relative paths are resolved against the manifest's own directory.
inline std::vector<ManifestRow> load_manifest(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), errc::io, "cannot open manifest: " + path);
    const auto base = std::filesystem::path(path).parent_path();
    auto resolve = [&](const std::string& p) {
        std::filesystem::path fp(p);
        return fp.is_absolute() ? fp.string() : (base / fp).string();
    };
    std::vector<ManifestRow> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        line = detail::trim(line);
        if (line.empty() || line[0] == '#') continue;
        auto fields = detail::split_csv(line);
        require(fields.size() == 3 || fields.size() == 4, errc::io,
                path + ":" + std::to_string(lineno) + ": expected id,csv,schema[,k]");
        ManifestRow row;
        row.id = fields[0];
        row.csv_path = resolve(fields[1]);
        row.schema_path = resolve(fields[2]);
        if (fields.size() == 4) row.k = std::stoi(fields[3]);
        rows.push_back(std::move(row));
    }
    return rows;
}

// Resolves k: explicit flag wins, then the schema hint, then the class count.
inline int resolve_k(int flag_k, const Dataset& ds) {
    if (flag_k > 0) return flag_k;
    if (ds.schema.k_hint > 0) return ds.schema.k_hint;
    if (ds.ground_truth) return ds.class_count();
    fail(errc::parameter, "k not given and no schema hint or ground truth to infer it from");
}

// Loads, normalizes and validates a dataset from csv + schema paths.
inline Dataset load_prepared(const std::string& csv_path, const std::string& schema_path) {
    Schema schema = load_schema(schema_path);
    Dataset ds = load_csv(csv_path, schema);
    return normalize(std::move(ds));
}

struct PerAttributeRow {
    std::string name;
    bool is_numeric = false;
    int seed_clusters = 0;
    bool qualifying = false;  // categorical with X == k, or any numeric attribute
    double ac = -1.0;
};

struct PerAttributeReport {
    std::vector<PerAttributeRow> rows;
    double final_ac = -1.0;
    std::string chosen_consensus;
};

// Accuracy of every attribute-seeded run next to the final pipeline result.
// The qualifying flag marks the rows comparable to the final clustering
// (seed cluster count equal to k; numeric seeds always are).
inline PerAttributeReport per_attribute_report(const Dataset& ds, const DistanceModel& model, int k,
                                               const PipelineOptions& opts = {}) {
    require(ds.ground_truth.has_value(), errc::parameter, "per-attribute report requires ground truth");
    PipelineResult pr = run_pipeline(ds, model, k, opts);
    PerAttributeReport rep;
    for (const auto& run : pr.init.runs) {
        PerAttributeRow row;
        row.name = run.name;
        row.is_numeric = run.is_numeric;
        row.seed_clusters = run.seed_clusters;
        row.qualifying = run.is_numeric || run.seed_clusters == k;
        row.ac = accuracy(run.result.partition, *ds.ground_truth).ac;
        rep.rows.push_back(std::move(row));
    }
    rep.final_ac = accuracy(pr.final_run.partition, *ds.ground_truth).ac;
    rep.chosen_consensus = to_string(pr.init.chosen);
    return rep;
}

struct ExperimentRow {
    std::string id;
    std::size_t n = 0;
    int m_r = 0, m_c = 0, k = 0;
    double init_ac = -1.0;
    double rand_mean = -1.0;
    double rand_sd = -1.0;
    std::string chosen_consensus;
    std::string error;  // non-empty when the row failed
};

inline ExperimentRow run_experiment_row(const ManifestRow& row, std::uint64_t seed, int repeats,
                                        const PipelineOptions& opts) {
    ExperimentRow out;
    out.id = row.id;
    Dataset ds = load_prepared(row.csv_path, row.schema_path);
    out.n = ds.n;
    out.m_r = ds.m_r();
    out.m_c = ds.m_c();
    out.k = resolve_k(row.k, ds);
    require(ds.ground_truth.has_value(), errc::parameter, row.id + ": no ground truth for accuracy");
    DistanceModel model = build_model(ds, effective_bins(opts.bins, out.k));

    PipelineResult pr = run_pipeline(ds, model, out.k, opts);
    out.init_ac = accuracy(pr.final_run.partition, *ds.ground_truth).ac;
    out.chosen_consensus = to_string(pr.init.chosen);

    auto baseline = run_random_baseline(ds, model, out.k, seed, repeats, opts);
    std::vector<double> acs;
    for (const auto& b : baseline) acs.push_back(b.ac);
    out.rand_mean = mean_accuracy(acs);
    out.rand_sd = accuracy_sd(acs);
    return out;
}

inline std::vector<ExperimentRow> run_experiment(const std::vector<ManifestRow>& manifest, std::uint64_t seed,
                                                 int repeats, const PipelineOptions& opts) {
    std::vector<ExperimentRow> rows;
    for (const auto& mr : manifest) {
        try {
            rows.push_back(run_experiment_row(mr, seed, repeats, opts));
        } catch (const std::exception& e) {
            ExperimentRow failed;
            failed.id = mr.id;
            failed.error = e.what();
            rows.push_back(std::move(failed));
        }
    }
    return rows;
}

}  // namespace kmix
