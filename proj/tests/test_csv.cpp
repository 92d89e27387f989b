#include "tscp/csv.hpp"

#include "tscp/rng.hpp"
#include "tscp/synthetic.hpp"

#include <doctest.h>

#include "temp_util.hpp"

#include <fstream>
#include <stdexcept>

using namespace tscp;

namespace {

void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

}  // namespace

TEST_SUITE("csv") {

TEST_CASE("series round-trips bit-for-bit") {
    RegimeSeriesConfig cfg;
    cfg.total_steps = 64;
    cfg.seed = 2;
    const RegimeSeries s = generate_regime_series(cfg);

    const test::TempDir dir("csv");
    const std::string path = (dir.path / "series.csv").string();

    SUBCASE("without predictions, with regime diagnostic") {
        write_series_csv(path, s.data, &s.regime);
        const CsvSeries back = read_series_csv(path);
        CHECK(back.data.targets == s.data.targets);
        CHECK(back.data.features == s.data.features);
        CHECK(back.data.timestamps == s.data.timestamps);
        CHECK(back.regime == s.regime);
        CHECK_FALSE(back.data.has_predictions());
    }
    SUBCASE("with predictions") {
        Eigen::VectorXd preds(64);
        rng::Engine eng(5);
        for (Eigen::Index i = 0; i < 64; ++i) {
            preds[i] = rng::normal(eng, 0.0, 1e3);
        }
        const TimeSeriesDataset with = s.data.with_predictions(preds);
        write_series_csv(path, with);
        const CsvSeries back = read_series_csv(path);
        CHECK(back.data.predictions == with.predictions);
        CHECK(back.data.errors == with.errors);
        CHECK(back.data.targets == with.targets);
        CHECK(back.regime.empty());
    }
}

TEST_CASE("malformed files are rejected") {
    const test::TempDir dir("csvbad");
    const auto path = dir.path / "bad.csv";

    SUBCASE("unknown column") {
        write_text(path, "t,y,mystery\n0,1.0,2.0\n");
        CHECK_THROWS_AS(read_series_csv(path.string()), std::runtime_error);
    }
    SUBCASE("missing cell") {
        write_text(path, "t,y,x0\n0,1.0\n");
        CHECK_THROWS_AS(read_series_csv(path.string()), std::runtime_error);
    }
    SUBCASE("non-numeric cell") {
        write_text(path, "t,y,x0\n0,one,2.0\n");
        CHECK_THROWS_AS(read_series_csv(path.string()), std::runtime_error);
    }
    SUBCASE("columns out of order") {
        write_text(path, "y,t,x0\n1.0,0,2.0\n");
        CHECK_THROWS_AS(read_series_csv(path.string()), std::runtime_error);
    }
    SUBCASE("no such file") {
        CHECK_THROWS_AS(read_series_csv((dir.path / "nope.csv").string()),
                        std::runtime_error);
    }
}

TEST_CASE("generic table reader picks columns by name") {
    const test::TempDir dir("table");
    const auto path = dir.path / "table.csv";
    write_text(path, "a,b,c\n1,2,3\n4,5,6\n");
    const CsvTable t = read_csv_table(path.string());
    REQUIRE(t.rows.size() == 2);
    CHECK(t.column("a") == 0);
    CHECK(t.column("c") == 2);
    CHECK(t.rows[1][t.column("b")] == "5");
    CHECK_THROWS_AS(t.column("z"), std::runtime_error);
}

TEST_CASE("format_double renders shortest round-trip decimals") {
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(-3.0) == "-3");
    CHECK(format_double(1.0 / 3.0) == "0.3333333333333333");
    rng::Engine eng(1);
    for (int i = 0; i < 200; ++i) {
        const double v = rng::normal(eng, 0.0, 1e6);
        const std::string s = format_double(v);
        CHECK(std::stod(s) == v);
    }
}

TEST_CASE("atomic writes land complete or not at all") {
    const test::TempDir dir("atomic");
    const auto path = dir.path / "sub" / "file.txt";
    write_file_atomic(path.string(), "hello\n");
    std::ifstream in(path);
    std::string content((std::istreambuf_iterator<char>(in)),
                        std::istreambuf_iterator<char>());
    CHECK(content == "hello\n");

    // overwrite keeps the new content only
    write_file_atomic(path.string(), "world\n");
    std::ifstream in2(path);
    std::string content2((std::istreambuf_iterator<char>(in2)),
                         std::istreambuf_iterator<char>());
    CHECK(content2 == "world\n");
}

}  // TEST_SUITE
