#pragma once

// Mixed-dataset container: CSV loading against a column schema, min-max
// normalization, and equal-width discretization of numeric columns (the
// binned view is used only for attribute-weight estimation, never for
// clustering geometry).

#include <cctype>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "kmix/common.hpp"

namespace kmix {

enum class ColumnKind { numeric, categorical, label, ignore };

struct Column {
    std::string name;
    ColumnKind kind = ColumnKind::categorical;
};

struct Schema {
    std::string dataset_id;
    std::vector<Column> columns;
    int k_hint = 0;  // 0 = unset
    std::string missing_token = "?";
    bool has_header = false;

    int count(ColumnKind kind) const {
        int c = 0;
        for (const auto& col : columns)
            if (col.kind == kind) ++c;
        return c;
    }

    void validate() const {
        int usable = count(ColumnKind::numeric) + count(ColumnKind::categorical);
        require(usable >= 1, errc::schema, "schema: needs at least one numeric or categorical column");
        require(count(ColumnKind::label) <= 1, errc::schema, "schema: at most one label column");
        std::vector<std::string> names;
        for (const auto& col : columns) names.push_back(col.name);
        std::sort(names.begin(), names.end());
        require(std::adjacent_find(names.begin(), names.end()) == names.end(), errc::schema,
                "schema: duplicate column name");
    }
};

struct MissingPolicy {
    std::string token = "?";
};

// Reference to a clusterable attribute in schema order.
struct AttrRef {
    bool is_numeric = false;
    int index = 0;       // index within the numeric or categorical group
    int schema_col = 0;  // original column position
};

struct NormParams {
    double min = 0.0, max = 0.0;
    bool constant = false;
    bool applied = false;
};

struct Preprocess {
    std::string missing_token;
    std::vector<std::int64_t> imputed_numeric;      // per numeric column
    std::vector<std::int64_t> missing_categorical;  // per categorical column
    std::vector<NormParams> norm;                   // per numeric column
    bool normalized = false;
};

struct Dataset {
    Schema schema;
    std::size_t n = 0;
    std::vector<std::vector<double>> numeric_cols;        // m_r columns
    std::vector<std::vector<std::int32_t>> cat_cols;      // m_c columns
    std::vector<std::vector<std::string>> value_names;    // per categorical column, code -> name
    std::vector<std::string> numeric_names;
    std::vector<std::string> cat_names;
    std::vector<AttrRef> attrs;                           // schema order over clusterable columns
    std::optional<std::vector<std::int32_t>> ground_truth;
    std::vector<std::string> class_names;
    Preprocess prep;

    int m_r() const { return static_cast<int>(numeric_cols.size()); }
    int m_c() const { return static_cast<int>(cat_cols.size()); }
    int m() const { return m_r() + m_c(); }
    int alphabet(int cat_idx) const { return static_cast<int>(value_names[static_cast<std::size_t>(cat_idx)].size()); }

    int class_count() const { return static_cast<int>(class_names.size()); }

    void validate() const {
        for (const auto& col : numeric_cols) {
            require(col.size() == n, errc::internal, "dataset: ragged numeric column");
            for (double v : col) require(std::isfinite(v), errc::internal, "dataset: non-finite numeric value");
        }
        for (int t = 0; t < m_c(); ++t) {
            const auto& col = cat_cols[static_cast<std::size_t>(t)];
            require(col.size() == n, errc::internal, "dataset: ragged categorical column");
            int x = alphabet(t);
            require(x >= 1, errc::internal, "dataset: empty categorical alphabet");
            for (std::int32_t c : col)
                require(c >= 0 && c < x, errc::internal, "dataset: categorical code out of range");
        }
    }

    // Lexicographic order on row content over all clusterable columns, in
    // schema order. Permutation-invariant, unlike a row index.
    bool row_content_less(std::size_t a, std::size_t b) const {
        for (const auto& attr : attrs) {
            if (attr.is_numeric) {
                double va = numeric_cols[static_cast<std::size_t>(attr.index)][a];
                double vb = numeric_cols[static_cast<std::size_t>(attr.index)][b];
                if (va != vb) return va < vb;
            } else {
                std::int32_t va = cat_cols[static_cast<std::size_t>(attr.index)][a];
                std::int32_t vb = cat_cols[static_cast<std::size_t>(attr.index)][b];
                if (va != vb) return va < vb;
            }
        }
        return false;
    }
};

// Equal-width binning of normalized numeric columns over [0,1]. Empty bins
// are dropped and codes compacted, so the induced alphabet lists non-empty
// bins only.
struct Discretization {
    int bins = 0;  // requested bin count s
    std::vector<std::vector<double>> edges;        // per numeric column: s+1 edges over [0,1]
    std::vector<std::vector<std::int32_t>> codes;  // per numeric column: compact code per row
    std::vector<int> alphabet;                     // per numeric column: non-empty bin count
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(trim(field));
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

inline bool parse_double(const std::string& s, double& out) {
    const char* b = s.data();
    const char* e = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(b, e, out);
    return ec == std::errc() && ptr == e && std::isfinite(out);
}

}  // namespace detail

inline ColumnKind parse_kind(const std::string& word) {
    if (word == "numeric") return ColumnKind::numeric;
    if (word == "categorical") return ColumnKind::categorical;
    if (word == "label" || word == "label-ignored") return ColumnKind::label;
    if (word == "ignore") return ColumnKind::ignore;
    fail(errc::schema, "schema: unknown column kind '" + word + "'");
}

// Schema manifest: plain "key: value" lines. Keys: dataset, k, missing,
// header (true|false), and one "col: <name> <kind>" line per column.
inline Schema load_schema(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), errc::io, "cannot open schema file: " + path);
    Schema schema;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = detail::trim(line);
        if (line.empty() || line[0] == '#') continue;
        auto colon = line.find(':');
        require(colon != std::string::npos, errc::schema,
                path + ":" + std::to_string(lineno) + ": expected 'key: value'");
        std::string key = detail::trim(line.substr(0, colon));
        std::string value = detail::trim(line.substr(colon + 1));
        if (key == "dataset") {
            schema.dataset_id = value;
        } else if (key == "k") {
            schema.k_hint = std::stoi(value);
            require(schema.k_hint >= 1, errc::schema, "schema: k must be positive");
        } else if (key == "missing") {
            schema.missing_token = value;
        } else if (key == "header") {
            require(value == "true" || value == "false", errc::schema, "schema: header must be true|false");
            schema.has_header = (value == "true");
        } else if (key == "col") {
            auto space = value.find_last_of(" \t");
            require(space != std::string::npos, errc::schema,
                    path + ":" + std::to_string(lineno) + ": expected 'col: <name> <kind>'");
            Column col;
            col.name = detail::trim(value.substr(0, space));
            col.kind = parse_kind(detail::trim(value.substr(space + 1)));
            schema.columns.push_back(col);
        } else {
            fail(errc::schema, path + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
        }
    }
    schema.validate();
    if (schema.dataset_id.empty()) {
        auto slash = path.find_last_of('/');
        auto stem = (slash == std::string::npos) ? path : path.substr(slash + 1);
        auto dot = stem.find_last_of('.');
        schema.dataset_id = (dot == std::string::npos) ? stem : stem.substr(0, dot);
    }
    return schema;
}

// Loads a comma-separated file against the schema. Categorical codes are
// canonicalized by lexicographic value-name order, so the code books do not
// depend on row order. Missing categorical tokens become their own category;
// missing numeric values are imputed with the column mean (pre-normalization).
inline Dataset load_csv(const std::string& path, const Schema& schema, const MissingPolicy& policy) {
    schema.validate();
    std::ifstream in(path);
    require(in.good(), errc::io, "cannot open dataset file: " + path);

    const std::size_t width = schema.columns.size();
    std::vector<std::vector<std::string>> rows;
    std::string line;
    std::size_t lineno = 0;
    bool header_pending = schema.has_header;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (detail::trim(line).empty()) continue;
        if (header_pending) {
            header_pending = false;
            continue;
        }
        auto fields = detail::split_csv(line);
        require(fields.size() == width, errc::io,
                path + ": row " + std::to_string(lineno) + ": expected " + std::to_string(width) +
                    " fields, got " + std::to_string(fields.size()));
        rows.push_back(std::move(fields));
    }

    require(!rows.empty(), errc::io, path + ": no data rows");

    Dataset ds;
    ds.schema = schema;
    ds.n = rows.size();

    // Group columns and remember schema order.
    std::vector<int> numeric_cols_in_schema, cat_cols_in_schema;
    int label_col = -1;
    for (int c = 0; c < static_cast<int>(width); ++c) {
        switch (schema.columns[static_cast<std::size_t>(c)].kind) {
            case ColumnKind::numeric:
                ds.attrs.push_back({true, static_cast<int>(numeric_cols_in_schema.size()), c});
                numeric_cols_in_schema.push_back(c);
                ds.numeric_names.push_back(schema.columns[static_cast<std::size_t>(c)].name);
                break;
            case ColumnKind::categorical:
                ds.attrs.push_back({false, static_cast<int>(cat_cols_in_schema.size()), c});
                cat_cols_in_schema.push_back(c);
                ds.cat_names.push_back(schema.columns[static_cast<std::size_t>(c)].name);
                break;
            case ColumnKind::label:
                label_col = c;
                break;
            case ColumnKind::ignore:
                break;
        }
    }

    ds.prep.missing_token = policy.token;
    ds.prep.imputed_numeric.assign(numeric_cols_in_schema.size(), 0);
    ds.prep.missing_categorical.assign(cat_cols_in_schema.size(), 0);
    ds.prep.norm.assign(numeric_cols_in_schema.size(), NormParams{});

    // Numeric columns: parse, impute missing with the column mean.
    for (std::size_t t = 0; t < numeric_cols_in_schema.size(); ++t) {
        int c = numeric_cols_in_schema[t];
        std::vector<double> col(ds.n, 0.0);
        std::vector<std::size_t> missing;
        std::vector<double> present;
        for (std::size_t r = 0; r < ds.n; ++r) {
            const std::string& cell = rows[r][static_cast<std::size_t>(c)];
            if (cell == policy.token) {
                missing.push_back(r);
                continue;
            }
            double v;
            require(detail::parse_double(cell, v), errc::io,
                    path + ": row " + std::to_string(r + 1) + ": cannot parse '" + cell +
                        "' as numeric for column " + schema.columns[static_cast<std::size_t>(c)].name);
            col[r] = v;
            present.push_back(v);
        }
        double mean = detail::stable_mean(present);
        for (std::size_t r : missing) col[r] = mean;
        ds.prep.imputed_numeric[t] = static_cast<std::int64_t>(missing.size());
        ds.numeric_cols.push_back(std::move(col));
    }

    // Categorical columns: collect distinct names, sort, assign codes.
    for (std::size_t t = 0; t < cat_cols_in_schema.size(); ++t) {
        int c = cat_cols_in_schema[t];
        std::vector<std::string> names;
        for (std::size_t r = 0; r < ds.n; ++r) names.push_back(rows[r][static_cast<std::size_t>(c)]);
        std::sort(names.begin(), names.end());
        names.erase(std::unique(names.begin(), names.end()), names.end());
        std::map<std::string, std::int32_t> code;
        for (std::size_t i = 0; i < names.size(); ++i) code[names[i]] = static_cast<std::int32_t>(i);
        std::vector<std::int32_t> col(ds.n);
        std::int64_t missing = 0;
        for (std::size_t r = 0; r < ds.n; ++r) {
            const std::string& cell = rows[r][static_cast<std::size_t>(c)];
            if (cell == policy.token) ++missing;
            col[r] = code[cell];
        }
        ds.prep.missing_categorical[t] = missing;
        ds.cat_cols.push_back(std::move(col));
        ds.value_names.push_back(std::move(names));
    }

    if (label_col >= 0 && ds.n > 0) {
        std::vector<std::string> names;
        for (std::size_t r = 0; r < ds.n; ++r) names.push_back(rows[r][static_cast<std::size_t>(label_col)]);
        std::sort(names.begin(), names.end());
        names.erase(std::unique(names.begin(), names.end()), names.end());
        std::map<std::string, std::int32_t> code;
        for (std::size_t i = 0; i < names.size(); ++i) code[names[i]] = static_cast<std::int32_t>(i);
        std::vector<std::int32_t> truth(ds.n);
        for (std::size_t r = 0; r < ds.n; ++r) truth[r] = code[rows[r][static_cast<std::size_t>(label_col)]];
        ds.ground_truth = std::move(truth);
        ds.class_names = std::move(names);
    }

    ds.validate();
    return ds;
}

inline Dataset load_csv(const std::string& path, const Schema& schema) {
    return load_csv(path, schema, MissingPolicy{schema.missing_token});
}

// Min-max scales every numeric column to [0,1]; constant columns map to 0.
// Idempotent, and a no-op for pure categorical data.
inline Dataset normalize(Dataset ds) {
    for (int t = 0; t < ds.m_r(); ++t) {
        auto& col = ds.numeric_cols[static_cast<std::size_t>(t)];
        if (col.empty()) continue;
        double lo = *std::min_element(col.begin(), col.end());
        double hi = *std::max_element(col.begin(), col.end());
        NormParams p;
        p.min = lo;
        p.max = hi;
        p.applied = true;
        if (lo == hi) {
            p.constant = true;
            std::fill(col.begin(), col.end(), 0.0);
        } else {
            double scale = hi - lo;
            for (double& v : col) v = (v - lo) / scale;
        }
        ds.prep.norm[static_cast<std::size_t>(t)] = p;
    }
    ds.prep.normalized = true;
    ds.validate();
    return ds;
}

inline Discretization discretize(const Dataset& ds, int bins) {
    require(bins >= 2, errc::parameter, "discretize: bins must be >= 2");
    require(ds.prep.normalized || ds.m_r() == 0, errc::parameter, "discretize: normalize the dataset first");
    Discretization disc;
    disc.bins = bins;
    for (int t = 0; t < ds.m_r(); ++t) {
        const auto& col = ds.numeric_cols[static_cast<std::size_t>(t)];
        std::vector<double> edges(static_cast<std::size_t>(bins) + 1);
        for (int j = 0; j <= bins; ++j) edges[static_cast<std::size_t>(j)] = static_cast<double>(j) / bins;
        std::vector<std::int32_t> raw(ds.n);
        std::vector<char> used(static_cast<std::size_t>(bins), 0);
        for (std::size_t r = 0; r < ds.n; ++r) {
            double v = col[r];
            int b;
            if (v <= 0.0)
                b = 0;
            else if (v >= 1.0)
                b = bins - 1;
            else
                b = std::min(bins - 1, static_cast<int>(std::floor(v * bins)));
            raw[r] = b;
            used[static_cast<std::size_t>(b)] = 1;
        }
        // Compact away empty bins.
        std::vector<std::int32_t> remap(static_cast<std::size_t>(bins), -1);
        std::int32_t next = 0;
        for (int b = 0; b < bins; ++b)
            if (used[static_cast<std::size_t>(b)]) remap[static_cast<std::size_t>(b)] = next++;
        for (auto& code : raw) code = remap[static_cast<std::size_t>(code)];
        disc.edges.push_back(std::move(edges));
        disc.codes.push_back(std::move(raw));
        disc.alphabet.push_back(next);
    }
    return disc;
}

}  // namespace kmix
