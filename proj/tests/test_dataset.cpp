#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "kmix/dataset.hpp"

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
    auto path = std::filesystem::temp_directory_path() / ("kmix_test_" + name);
    std::ofstream out(path, std::ios::binary);
    out << content;
    return path.string();
}

kmix::Schema two_cat_schema() {
    kmix::Schema s;
    s.columns = {{"A", kmix::ColumnKind::categorical}, {"B", kmix::ColumnKind::categorical}};
    return s;
}

}  // namespace

TEST_CASE("load_csv structural round-trip on a small categorical file") {
    auto path = write_temp("basic.csv", "a,x\na,x\na,y\nb,y\n");
    auto ds = kmix::load_csv(path, two_cat_schema(), {});
    CHECK(ds.n == 4);
    CHECK(ds.m_c() == 2);
    CHECK(ds.m_r() == 0);
    CHECK(ds.alphabet(0) == 2);
    CHECK(ds.alphabet(1) == 2);
    // lexicographic canonical codes: a=0, b=1 / x=0, y=1
    CHECK(ds.cat_cols[0] == std::vector<std::int32_t>{0, 0, 0, 1});
    CHECK(ds.cat_cols[1] == std::vector<std::int32_t>{0, 0, 1, 1});
}

TEST_CASE("loading the same file twice is bit-identical") {
    auto path = write_temp("twice.csv", "a,x\nb,y\nc,x\n");
    auto d1 = kmix::load_csv(path, two_cat_schema(), {});
    auto d2 = kmix::load_csv(path, two_cat_schema(), {});
    CHECK(d1.cat_cols == d2.cat_cols);
    CHECK(d1.value_names == d2.value_names);
}

TEST_CASE("row permutation leaves code books identical and rows a permuted multiset") {
    auto p1 = write_temp("perm1.csv", "b,x\na,y\nc,x\na,x\n");
    auto p2 = write_temp("perm2.csv", "a,x\nc,x\na,y\nb,x\n");
    auto d1 = kmix::load_csv(p1, two_cat_schema(), {});
    auto d2 = kmix::load_csv(p2, two_cat_schema(), {});
    CHECK(d1.value_names == d2.value_names);
    auto rows = [](const kmix::Dataset& d) {
        std::vector<std::pair<int, int>> r;
        for (std::size_t i = 0; i < d.n; ++i) r.emplace_back(d.cat_cols[0][i], d.cat_cols[1][i]);
        std::sort(r.begin(), r.end());
        return r;
    };
    CHECK(rows(d1) == rows(d2));
}

TEST_CASE("label column becomes canonical ground truth and is excluded from attributes") {
    kmix::Schema s;
    s.columns = {{"class", kmix::ColumnKind::label}, {"A", kmix::ColumnKind::categorical}};
    auto path = write_temp("label.csv", "yes,a\nno,b\nyes,b\n");
    auto ds = kmix::load_csv(path, s, {});
    CHECK(ds.m() == 1);
    REQUIRE(ds.ground_truth.has_value());
    // classes sorted: no=0, yes=1
    CHECK(*ds.ground_truth == std::vector<std::int32_t>{1, 0, 1});
    CHECK(ds.class_names == std::vector<std::string>{"no", "yes"});
}

TEST_CASE("malformed rows and bad numerics error with the row number") {
    kmix::Schema s;
    s.columns = {{"x", kmix::ColumnKind::numeric}, {"A", kmix::ColumnKind::categorical}};
    auto ragged = write_temp("ragged.csv", "1.0,a\n2.0\n");
    CHECK_THROWS_WITH_AS(kmix::load_csv(ragged, s, {}), doctest::Contains("row 2"), kmix::error);
    auto badnum = write_temp("badnum.csv", "1.0,a\nfoo,b\n");
    CHECK_THROWS_WITH_AS(kmix::load_csv(badnum, s, {}), doctest::Contains("row 2"), kmix::error);
    CHECK_THROWS_AS(kmix::load_csv("/nonexistent/file.csv", s, {}), kmix::error);
}

TEST_CASE("missing policy: categorical missing is its own category, numeric is mean-imputed") {
    kmix::Schema s;
    s.columns = {{"x", kmix::ColumnKind::numeric}, {"A", kmix::ColumnKind::categorical}};
    auto path = write_temp("missing.csv", "1.0,a\n?,?\n3.0,b\n");
    auto ds = kmix::load_csv(path, s, {});
    CHECK(ds.numeric_cols[0][1] == doctest::Approx(2.0));
    CHECK(ds.prep.imputed_numeric[0] == 1);
    CHECK(ds.alphabet(0) == 3);  // "?" sorts before "a","b"
    CHECK(ds.prep.missing_categorical[0] == 1);
}

TEST_CASE("header row is skipped when the schema says so") {
    kmix::Schema s = two_cat_schema();
    s.has_header = true;
    auto path = write_temp("header.csv", "A,B\na,x\nb,y\n");
    auto ds = kmix::load_csv(path, s, {});
    CHECK(ds.n == 2);
}

TEST_CASE("normalize maps columns to [0,1], constants to 0, and is idempotent") {
    auto ds = kmix::load_csv(write_temp("norm.csv", "2,5,1\n4,5,2\n6,5,4\n"),
                             kmix::Schema{"", {{"a", kmix::ColumnKind::numeric},
                                               {"b", kmix::ColumnKind::numeric},
                                               {"c", kmix::ColumnKind::numeric}}},
                             {});
    auto norm = kmix::normalize(ds);
    CHECK(norm.numeric_cols[0] == std::vector<double>{0.0, 0.5, 1.0});
    CHECK(norm.numeric_cols[1] == std::vector<double>{0.0, 0.0, 0.0});
    CHECK(norm.numeric_cols[2][0] == doctest::Approx(0.0));
    CHECK(norm.numeric_cols[2][1] == doctest::Approx(1.0 / 3.0));
    CHECK(norm.numeric_cols[2][2] == doctest::Approx(1.0));
    CHECK(norm.prep.norm[1].constant);
    auto again = kmix::normalize(norm);
    CHECK(again.numeric_cols == norm.numeric_cols);
}

TEST_CASE("discretize: equal-width bins, boundary to the upper bin, empty bins compacted") {
    kmix::Schema s{"", {{"x", kmix::ColumnKind::numeric}}};
    auto ds = kmix::normalize(kmix::load_csv(write_temp("disc1.csv", "0\n0.49\n0.51\n1\n"), s, {}));
    auto d2 = kmix::discretize(ds, 2);
    CHECK(d2.codes[0] == std::vector<std::int32_t>{0, 0, 1, 1});
    CHECK(d2.alphabet[0] == 2);

    auto ds2 = kmix::normalize(kmix::load_csv(write_temp("disc2.csv", "0\n0.1\n0.9\n"), s, {}));
    auto d4 = kmix::discretize(ds2, 4);
    CHECK(d4.codes[0] == std::vector<std::int32_t>{0, 0, 1});
    CHECK(d4.alphabet[0] == 2);

    auto ds3 = kmix::normalize(kmix::load_csv(write_temp("disc3.csv", "7\n7\n7\n"), s, {}));
    auto d1 = kmix::discretize(ds3, 4);
    CHECK(d1.alphabet[0] == 1);

    CHECK_THROWS_AS(kmix::discretize(ds, 1), kmix::error);
}

TEST_CASE("every row maps to exactly one bin for random normalized columns") {
    std::uint64_t state = 99;
    kmix::Schema s{"", {{"x", kmix::ColumnKind::numeric}}};
    for (int rep = 0; rep < 20; ++rep) {
        std::string csv;
        int n = 1 + static_cast<int>(kmix::detail::splitmix64(state) % 40);
        for (int i = 0; i < n; ++i)
            csv += std::to_string((kmix::detail::splitmix64(state) % 1001) / 1000.0) + "\n";
        auto ds = kmix::normalize(kmix::load_csv(write_temp("bins_rand.csv", csv), s, {}));
        int bins = 2 + static_cast<int>(kmix::detail::splitmix64(state) % 7);
        auto disc = kmix::discretize(ds, bins);
        for (auto code : disc.codes[0]) {
            CHECK(code >= 0);
            CHECK(code < disc.alphabet[0]);
        }
    }
}

TEST_CASE("schema manifest parsing") {
    auto path = write_temp("schema.txt",
                           "# comment\ndataset: demo\nk: 3\nmissing: NA\nheader: true\n"
                           "col: class label\ncol: age numeric\ncol: color categorical\n");
    auto s = kmix::load_schema(path);
    CHECK(s.dataset_id == "demo");
    CHECK(s.k_hint == 3);
    CHECK(s.missing_token == "NA");
    CHECK(s.has_header);
    REQUIRE(s.columns.size() == 3);
    CHECK(s.columns[0].kind == kmix::ColumnKind::label);
    CHECK(s.columns[1].kind == kmix::ColumnKind::numeric);
    CHECK(s.columns[2].kind == kmix::ColumnKind::categorical);

    auto bad = write_temp("schema_bad.txt", "col: x widget\n");
    CHECK_THROWS_AS(kmix::load_schema(bad), kmix::error);
}
