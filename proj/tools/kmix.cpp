// kmix command line: cluster mixed data with the deterministic per-attribute
// seeding pipeline or the seeded random baseline, run consensus / evaluation
// pieces standalone, and reproduce experiment grids from a manifest.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "kmix/harness.hpp"

namespace {

using nlohmann::json;

int exit_code(kmix::errc kind) {
    switch (kind) {
        case kmix::errc::io: return 2;
        case kmix::errc::schema: return 3;
        case kmix::errc::parameter: return 4;
        case kmix::errc::model: return 5;
        case kmix::errc::internal: return 6;
    }
    return 6;
}

struct CommonOpts {
    std::string data_path;
    std::string schema_path;
    int k = 0;
    int bins = 0;
    int max_iter = 100;
    double balance = 1.2;
    std::string out_dir;
};

std::string resolve_out_dir(const std::string& flag) {
    if (!flag.empty()) return flag;
    if (const char* env = std::getenv("KMIX_OUT_DIR")) return env;
    return ".";
}

std::string join_path(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("data", opts.data_path, "dataset CSV file")->required();
    cmd->add_option("--schema", opts.schema_path, "schema manifest file")->required();
    cmd->add_option("--k", opts.k, "number of clusters (default: schema hint or class count)");
    cmd->add_option("--bins", opts.bins, "discretization bins for weights (default: max(k,4))");
    cmd->add_option("--max-iter", opts.max_iter, "KMCMD iteration cap");
    cmd->add_option("--balance", opts.balance, "consensus partitioner balance factor");
    cmd->add_option("--out-dir", opts.out_dir, "output directory (default: $KMIX_OUT_DIR or .)");
}

kmix::PipelineOptions pipeline_opts(const CommonOpts& opts) {
    kmix::PipelineOptions p;
    p.bins = opts.bins;
    p.balance = opts.balance;
    p.kmcmd.max_iterations = opts.max_iter;
    return p;
}

json model_to_json(const kmix::Dataset& ds, const kmix::DistanceModel& model) {
    json j;
    json deltas = json::object();
    for (int t = 0; t < ds.m_c(); ++t) {
        const auto& dm = model.delta[static_cast<std::size_t>(t)];
        json rows = json::array();
        for (int a = 0; a < dm.dim; ++a) {
            json row = json::array();
            for (int b = 0; b < dm.dim; ++b) row.push_back(dm.at(a, b));
            rows.push_back(row);
        }
        deltas[ds.cat_names[static_cast<std::size_t>(t)]] = {
            {"values", ds.value_names[static_cast<std::size_t>(t)]}, {"delta", rows}};
    }
    j["categorical"] = deltas;
    json weights = json::object();
    for (int t = 0; t < ds.m_r(); ++t)
        weights[ds.numeric_names[static_cast<std::size_t>(t)]] = model.weights[static_cast<std::size_t>(t)];
    j["numeric_weights"] = weights;
    j["bins"] = model.disc.bins;
    j["zero_support_attributes"] = model.zero_support;
    return j;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    kmix::require(out.good(), kmix::errc::io, "cannot write: " + path);
    out << text;
}

int cmd_cluster(const CommonOpts& opts, const std::string& method, std::uint64_t seed, int repeats) {
    kmix::Dataset ds = kmix::load_prepared(opts.data_path, opts.schema_path);
    const int k = kmix::resolve_k(opts.k, ds);
    auto popts = pipeline_opts(opts);
    kmix::DistanceModel model = kmix::build_model(ds, kmix::effective_bins(opts.bins, k));
    const std::string out_dir = resolve_out_dir(opts.out_dir);
    std::filesystem::create_directories(out_dir);

    kmix::RunReport report;
    report.dataset_id = ds.schema.dataset_id;
    report.method = method;
    report.k = k;
    report.bins = kmix::effective_bins(opts.bins, k);
    report.n = ds.n;
    report.m_r = ds.m_r();
    report.m_c = ds.m_c();
    report.prep = ds.prep;
    report.seed = seed;
    report.repeats = repeats;

    if (method == "initkmix") {
        for (int r = 0; r < repeats; ++r) {
            kmix::PipelineResult pr = kmix::run_pipeline(ds, model, k, popts);
            std::string label_path = join_path(out_dir, repeats == 1 ? "labels_initkmix.txt"
                                                                     : "labels_initkmix_run" + std::to_string(r) +
                                                                           ".txt");
            kmix::write_labels(label_path, pr.final_run.partition.labels);
            report.iterations.push_back(pr.final_run.iterations);
            report.seconds.push_back(pr.seconds);
            report.chosen_consensus = kmix::to_string(pr.init.chosen);
            report.anmi_hgpa = pr.init.anmi_hgpa;
            report.anmi_mcla = pr.init.anmi_mcla;
            if (ds.ground_truth) report.acs.push_back(kmix::accuracy(pr.final_run.partition, *ds.ground_truth).ac);
        }
    } else if (method == "random") {
        auto runs = kmix::run_random_baseline(ds, model, k, seed, repeats, popts);
        for (std::size_t r = 0; r < runs.size(); ++r) {
            kmix::write_labels(join_path(out_dir, "labels_random_run" + std::to_string(r) + ".txt"),
                               runs[r].result.partition.labels);
            report.iterations.push_back(runs[r].result.iterations);
            report.seconds.push_back(runs[r].seconds);
            if (ds.ground_truth) report.acs.push_back(runs[r].ac);
        }
    } else {
        kmix::fail(kmix::errc::parameter, "unknown method '" + method + "' (expected initkmix|random)");
    }

    if (!report.acs.empty()) {
        report.mean_ac = kmix::mean_accuracy(report.acs);
        report.sd_ac = kmix::accuracy_sd(report.acs);
        if (method == "initkmix" && repeats > 1)
            kmix::require(report.sd_ac == 0.0, kmix::errc::internal,
                          "repeated initkmix runs reported a nonzero SD");
    }
    json j = report.to_json();
    write_text(join_path(out_dir, "report.json"), j.dump(2) + "\n");
    std::cout << j.dump(2) << std::endl;
    return 0;
}

int cmd_init(const CommonOpts& opts, bool dump_model) {
    kmix::Dataset ds = kmix::load_prepared(opts.data_path, opts.schema_path);
    const int k = kmix::resolve_k(opts.k, ds);
    auto popts = pipeline_opts(opts);
    kmix::DistanceModel model = kmix::build_model(ds, kmix::effective_bins(opts.bins, k));
    const std::string out_dir = resolve_out_dir(opts.out_dir);
    std::filesystem::create_directories(out_dir);

    kmix::InitOptions init_opts;
    init_opts.balance = popts.balance;
    init_opts.kmcmd = popts.kmcmd;
    kmix::InitOutcome outcome = kmix::run_initkmix(ds, model, k, init_opts);

    kmix::write_labels(join_path(out_dir, "consensus_labels.txt"), outcome.consensus.labels);
    kmix::write_label_matrix(join_path(out_dir, "runs_matrix.csv"), outcome);

    json j;
    j["dataset"] = ds.schema.dataset_id;
    j["k"] = k;
    j["consensus"] = kmix::to_string(outcome.chosen);
    j["anmi"] = {{"hgpa", outcome.anmi_hgpa}, {"mcla", outcome.anmi_mcla}};
    j["runs"] = json::array();
    for (const auto& run : outcome.runs)
        j["runs"].push_back({{"attribute", run.name},
                             {"kind", run.is_numeric ? "numeric" : "categorical"},
                             {"seed_clusters", run.seed_clusters},
                             {"iterations", run.result.iterations},
                             {"converged", run.result.converged}});
    j["skipped_attributes"] = outcome.skipped;
    j["single_valued_attributes"] = outcome.flagged;
    if (dump_model) write_text(join_path(out_dir, "model.json"), model_to_json(ds, model).dump(2) + "\n");
    write_text(join_path(out_dir, "init_report.json"), j.dump(2) + "\n");
    std::cout << j.dump(2) << std::endl;
    return 0;
}

int cmd_combine(const std::string& matrix_path, int k, double balance, const std::string& out_path) {
    kmix::LabelMatrix lm = kmix::read_label_matrix(matrix_path);
    kmix::require(k >= 1, kmix::errc::parameter, "combine: --k is required and must be >= 1");
    kmix::CombineResult res = kmix::combine(lm, k, balance);
    if (!out_path.empty())
        kmix::write_labels(out_path, res.partition.labels);
    else
        for (int lab : res.partition.labels) std::cout << lab << "\n";
    json j;
    j["chosen"] = kmix::to_string(res.chosen);
    j["anmi"] = {{"hgpa", res.anmi_hgpa}, {"mcla", res.anmi_mcla}};
    j["k"] = k;
    j["n"] = lm.n;
    j["runs"] = lm.m();
    std::cerr << j.dump(2) << std::endl;
    return 0;
}

int cmd_eval(const std::string& labels_path, const std::string& truth_path) {
    std::vector<int> labels = kmix::read_labels(labels_path);
    std::vector<int> truth = kmix::read_labels(truth_path);
    kmix::AccuracyResult res = kmix::accuracy(labels, truth);
    json j;
    j["n"] = labels.size();
    j["ac"] = res.ac;
    json mapping = json::array();
    for (std::size_t c = 0; c < res.mapping.size(); ++c)
        mapping.push_back({{"cluster", c},
                           {"class", res.mapping[c] < 0 ? json(nullptr) : json(res.mapping[c])}});
    j["mapping"] = mapping;
    std::cout << j.dump(2) << std::endl;
    return 0;
}

int cmd_per_attribute(const CommonOpts& opts) {
    kmix::Dataset ds = kmix::load_prepared(opts.data_path, opts.schema_path);
    const int k = kmix::resolve_k(opts.k, ds);
    kmix::DistanceModel model = kmix::build_model(ds, kmix::effective_bins(opts.bins, k));
    kmix::PerAttributeReport rep = kmix::per_attribute_report(ds, model, k, pipeline_opts(opts));
    const std::string out_dir = resolve_out_dir(opts.out_dir);
    std::filesystem::create_directories(out_dir);

    std::ostringstream csv;
    csv << "attribute,kind,seed_clusters,qualifying,ac\n";
    for (const auto& row : rep.rows)
        csv << row.name << ',' << (row.is_numeric ? "numeric" : "categorical") << ',' << row.seed_clusters << ','
            << (row.qualifying ? 1 : 0) << ',' << row.ac << '\n';
    csv << "__final__,consensus," << k << ",1," << rep.final_ac << '\n';
    write_text(join_path(out_dir, "per_attribute.csv"), csv.str());
    std::cout << csv.str();
    return 0;
}

int cmd_experiment(const std::string& manifest_path, std::uint64_t seed, int repeats, int bins, int max_iter,
                   double balance, const std::string& out_dir_flag) {
    auto manifest = kmix::load_manifest(manifest_path);
    kmix::PipelineOptions popts;
    popts.bins = bins;
    popts.balance = balance;
    popts.kmcmd.max_iterations = max_iter;
    auto rows = kmix::run_experiment(manifest, seed, repeats, popts);
    const std::string out_dir = resolve_out_dir(out_dir_flag);
    std::filesystem::create_directories(out_dir);

    std::ostringstream csv;
    csv << "dataset,n,m_r,m_c,k,initkmix_ac,initkmix_sd,random_mean_ac,random_sd,consensus,error\n";
    for (const auto& row : rows)
        csv << row.id << ',' << row.n << ',' << row.m_r << ',' << row.m_c << ',' << row.k << ',' << row.init_ac
            << ",0," << row.rand_mean << ',' << row.rand_sd << ',' << row.chosen_consensus << ',' << row.error
            << '\n';
    write_text(join_path(out_dir, "experiment.csv"), csv.str());

    std::printf("%-18s %6s %4s %4s %3s  %-18s %-18s\n", "dataset", "n", "m_r", "m_c", "k", "initKmix AC (SD)",
                "random AC (SD)");
    for (const auto& row : rows) {
        if (!row.error.empty()) {
            std::printf("%-18s  ERROR: %s\n", row.id.c_str(), row.error.c_str());
            continue;
        }
        std::printf("%-18s %6zu %4d %4d %3d  %.3f (0)          %.3f (%.3f)\n", row.id.c_str(), row.n, row.m_r,
                    row.m_c, row.k, row.init_ac, row.rand_mean, row.rand_sd);
    }
    bool any_error = false;
    for (const auto& row : rows) any_error |= !row.error.empty();
    return any_error ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"K-means-based clustering for mixed data with deterministic per-attribute seeding"};
    app.require_subcommand(1);

    CommonOpts cluster_opts;
    std::string method = "initkmix";
    std::uint64_t seed = 12345;
    int repeats_cluster = -1;
    auto* cluster = app.add_subcommand("cluster", "run clustering end to end");
    add_common(cluster, cluster_opts);
    cluster->add_option("--method", method, "initkmix|random");
    cluster->add_option("--seed", seed, "base seed for the random baseline");
    cluster->add_option("--repeats", repeats_cluster, "number of runs (default: 1 initkmix, 50 random)");

    CommonOpts init_opts;
    bool dump_model = false;
    auto* init = app.add_subcommand("init", "produce the deterministic initial partition");
    add_common(init, init_opts);
    init->add_flag("--dump-model", dump_model, "also write the distance model as JSON");

    std::string matrix_path, combine_out;
    int combine_k = 0;
    double combine_balance = 1.2;
    auto* combine = app.add_subcommand("combine", "consensus over a label-matrix CSV");
    combine->add_option("matrix", matrix_path, "label matrix CSV, one column per run")->required();
    combine->add_option("--k", combine_k, "number of consensus clusters")->required();
    combine->add_option("--balance", combine_balance, "partitioner balance factor");
    combine->add_option("--out", combine_out, "write labels here instead of stdout");

    std::string eval_labels, eval_truth;
    auto* eval = app.add_subcommand("eval", "clustering accuracy of labels against ground truth");
    eval->add_option("--labels", eval_labels, "label file, one integer per line")->required();
    eval->add_option("--truth", eval_truth, "ground-truth file, one integer per line")->required();

    CommonOpts pa_opts;
    auto* pa = app.add_subcommand("per-attribute", "accuracy of each attribute-seeded run");
    add_common(pa, pa_opts);

    std::string manifest_path;
    std::uint64_t exp_seed = 12345;
    int exp_repeats = 50, exp_bins = 0, exp_max_iter = 100;
    double exp_balance = 1.2;
    std::string exp_out;
    auto* exp = app.add_subcommand("experiment", "run a manifest of datasets and tabulate results");
    exp->add_option("manifest", manifest_path, "manifest CSV: id,csv,schema[,k]")->required();
    exp->add_option("--seed", exp_seed, "base seed for baselines");
    exp->add_option("--repeats", exp_repeats, "baseline repeats per dataset");
    exp->add_option("--bins", exp_bins, "discretization bins");
    exp->add_option("--max-iter", exp_max_iter, "KMCMD iteration cap");
    exp->add_option("--balance", exp_balance, "partitioner balance factor");
    exp->add_option("--out-dir", exp_out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 4;
    }

    try {
        if (app.got_subcommand(cluster)) {
            int repeats = repeats_cluster > 0 ? repeats_cluster : (method == "random" ? 50 : 1);
            return cmd_cluster(cluster_opts, method, seed, repeats);
        }
        if (app.got_subcommand(init)) return cmd_init(init_opts, dump_model);
        if (app.got_subcommand(combine)) return cmd_combine(matrix_path, combine_k, combine_balance, combine_out);
        if (app.got_subcommand(eval)) return cmd_eval(eval_labels, eval_truth);
        if (app.got_subcommand(pa)) return cmd_per_attribute(pa_opts);
        if (app.got_subcommand(exp))
            return cmd_experiment(manifest_path, exp_seed, exp_repeats, exp_bins, exp_max_iter, exp_balance,
                                  exp_out);
    } catch (const kmix::error& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 6;
    }
    return 0;
}
