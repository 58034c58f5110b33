#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "refactor/io.hpp"

using namespace refactor;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("refactor_io_test_" + std::to_string(::getpid()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("load_wide parses values, missing tokens, and labels") {
    TempDir tmp;
    write_file(tmp.file("x.csv"), "a,b\n1,0\n0,1\n");
    const ResponseMatrix x = load_wide(tmp.file("x.csv"));
    REQUIRE(x.rows() == 2);
    REQUIRE(x.value(0, 0) == 1.0);
    REQUIRE(x.value(1, 0) == 0.0);
    REQUIRE(x.col_labels() == std::vector<std::string>{"a", "b"});

    write_file(tmp.file("m.csv"), "a,b\n1,NA\n0,1\n");
    const ResponseMatrix m = load_wide(tmp.file("m.csv"), "NA");
    REQUIRE_FALSE(m.observed(0, 1));
    REQUIRE(m.missing_rate() == Catch::Approx(0.25));

    write_file(tmp.file("bad.csv"), "a,b\n1,2\n0,1\n");
    try {
        load_wide(tmp.file("bad.csv"));
        FAIL("expected an error");
    } catch (const std::runtime_error& e) {
        const std::string msg = e.what();
        REQUIRE(msg.find("row 1") != std::string::npos);
        REQUIRE(msg.find("'b'") != std::string::npos);
    }

    write_file(tmp.file("ragged.csv"), "a,b\n1,0,1\n0,1\n");
    REQUIRE_THROWS_AS(load_wide(tmp.file("ragged.csv")), std::runtime_error);
}

TEST_CASE("load_wide round-trips a written matrix") {
    TempDir tmp;
    RealMatrix v(3, 2);
    v << 1, 0,
         0, 1,
         1, 1;
    BoolMask mask = BoolMask::Constant(3, 2, true);
    mask(2, 0) = false;
    const ResponseMatrix x(v, mask);
    std::ofstream out(tmp.file("rt.csv"), std::ios::binary);
    out << "c0,c1\n";
    for (Eigen::Index i = 0; i < 3; ++i) {
        for (Eigen::Index j = 0; j < 2; ++j) {
            if (j) out << ',';
            if (x.observed(i, j))
                out << static_cast<int>(x.value(i, j));
            else
                out << "NA";
        }
        out << '\n';
    }
    out.close();
    const ResponseMatrix back = load_wide(tmp.file("rt.csv"), "NA");
    REQUIRE((back.mask() == x.mask()).all());
    for (Eigen::Index i = 0; i < 3; ++i)
        for (Eigen::Index j = 0; j < 2; ++j)
            if (x.observed(i, j)) REQUIRE(back.value(i, j) == x.value(i, j));
}

TEST_CASE("load_long pivots in first-appearance order") {
    TempDir tmp;
    write_file(tmp.file("l.csv"),
               "row,col,value\nr2,itemB,1\nr1,itemA,0\nr2,itemA,1\n");
    const ResponseMatrix x = load_long(tmp.file("l.csv"));
    REQUIRE(x.rows() == 2);
    REQUIRE(x.cols() == 2);
    REQUIRE(x.row_labels() == std::vector<std::string>{"r2", "r1"});
    REQUIRE(x.col_labels() == std::vector<std::string>{"itemB", "itemA"});
    REQUIRE(x.value(0, 0) == 1.0);        // r2 x itemB
    REQUIRE_FALSE(x.observed(1, 0));      // r1 x itemB never seen
    REQUIRE(x.missing_rate() == Catch::Approx(0.25));

    write_file(tmp.file("dup.csv"), "row,col,value\nr1,a,1\nr2,a,0\nr1,a,0\nr2,b,1\n");
    REQUIRE_THROWS_AS(load_long(tmp.file("dup.csv")), std::runtime_error);

    write_file(tmp.file("cols.csv"), "person,item,resp\np1,a,1\np2,a,0\np1,b,0\np2,b,1\n");
    const ResponseMatrix named = load_long(tmp.file("cols.csv"), "person", "item", "resp");
    REQUIRE(named.rows() == 2);
    REQUIRE_THROWS_AS(load_long(tmp.file("cols.csv")), std::runtime_error);
}

TEST_CASE("csv quoting round-trips awkward fields") {
    std::stringstream s(csv::quote("plain") + "," + csv::quote("has,comma") + "," +
                        csv::quote("has \"quote\"") + "\n");
    const auto rows = csv::parse(s);
    REQUIRE(rows.size() == 1);
    REQUIRE(rows[0] == std::vector<std::string>{"plain", "has,comma", "has \"quote\""});
}

TEST_CASE("report document round-trips through json") {
    ReportDocument doc;
    doc.dataset_id = "toy";
    doc.n_rows = 12;
    doc.n_cols = 5;
    doc.missing_rate = 0.125;
    doc.config_echo = nlohmann::json{{"assoc", "phi,quadrant"}, {"seed", "7"}};
    MetricPanel p;
    p.dataset_id = "toy";
    p.kind = "phi";
    p.mode = "refactor";
    p.seed = 7;
    p.set("auc", MetricValue::of(0.8123456789012345));
    p.set("cfi", MetricValue::absent("fewer than 3 items"));
    doc.panels.push_back(p);

    TempDir tmp;
    write_report(doc, tmp.file("r.json"), ReportFormat::json);
    const ReportDocument back = read_report(tmp.file("r.json"));
    REQUIRE(back.dataset_id == doc.dataset_id);
    REQUIRE(back.n_rows == doc.n_rows);
    REQUIRE(back.missing_rate == doc.missing_rate);
    REQUIRE(back.panels.size() == 1);
    REQUIRE(back.panels[0].at("auc").value == p.at("auc").value);
    REQUIRE(back.panels[0].at("cfi").missing_reason == "fewer than 3 items");

    // identical documents serialize to identical bytes
    write_report(back, tmp.file("r2.json"), ReportFormat::json);
    REQUIRE(read_file(tmp.file("r.json")) == read_file(tmp.file("r2.json")));
}

TEST_CASE("csv_long has one row per panel metric") {
    ReportDocument doc;
    doc.dataset_id = "toy";
    MetricPanel a;
    a.kind = "phi";
    a.mode = "refactor";
    a.set("auc", MetricValue::of(0.5));
    a.set("cosine", MetricValue::of(0.25));
    MetricPanel b;
    b.kind = "quadrant";
    b.mode = "verifactor";
    b.set("auc", MetricValue::absent("skipped"));
    doc.panels = {a, b};

    TempDir tmp;
    write_report(doc, tmp.file("r.csv"), ReportFormat::csv_long);
    std::ifstream in(tmp.file("r.csv"));
    std::string line;
    int lines = 0;
    while (std::getline(in, line))
        if (!line.empty()) ++lines;
    REQUIRE(lines == 1 + 3);  // header + sum of panel sizes
}

TEST_CASE("results csv renders full precision") {
    std::vector<ResultRow> rows(1);
    rows[0].study = "sim1";
    rows[0].rep = 3;
    rows[0].kind = "phi";
    rows[0].mode = "refactor";
    rows[0].metric = "auc";
    rows[0].value = 1.0 / 3.0;
    TempDir tmp;
    write_results_csv(rows, tmp.file("res.csv"));
    const std::string content = read_file(tmp.file("res.csv"));
    REQUIRE(content.find("0.33333333333333331") != std::string::npos);
}
