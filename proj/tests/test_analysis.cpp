#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "simtrans/analysis.hpp"
#include "simtrans/data.hpp"

using namespace simtrans;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / "simtrans_analysis_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  REQUIRE(out.good());
  out << text;
}

}  // namespace

TEST_CASE("jaccard_sets on worked examples") {
  CHECK(jaccard_sets({"el", "gato"}, {"el", "gato"}) == 1.0);
  CHECK(jaccard_sets({"a", "b"}, {"c", "d"}) == 0.0);
  // 1 shared of 5 distinct.
  CHECK(jaccard_sets({"el", "gato", "come"}, {"el", "gat", "menja"}) == 0.2);
  // Duplicates collapse before measuring.
  CHECK(jaccard_sets({"a", "a", "a", "b"}, {"a", "b", "b"}) == 1.0);
  CHECK(jaccard_sets({"x"}, {"x", "y", "z", "w"}) == 0.25);
  CHECK_THROWS_AS(jaccard_sets({}, {"a"}), ArgumentError);
  CHECK_THROWS_AS(jaccard_sets({"a"}, {}), ArgumentError);
}

TEST_CASE("jaccard_sets is symmetric and matches the enumeration oracle") {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> vocab(0, 19);
  std::uniform_int_distribution<int> len(1, 30);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::string> a, b;
    for (int i = len(rng); i > 0; --i) a.push_back("t" + std::to_string(vocab(rng)));
    for (int i = len(rng); i > 0; --i) b.push_back("t" + std::to_string(vocab(rng)));
    const double ours = jaccard_sets(a, b);
    CHECK(ours == oracles::jaccard_direct(a, b));
    CHECK(ours == jaccard_sets(b, a));
    CHECK(ours >= 0.0);
    CHECK(ours <= 1.0);
  }
}

TEST_CASE("jaccard_similarity reads whitespace-delimited token sets from files") {
  fs::path dir = fresh_dir("jaccard_files");
  write_file(dir / "a.txt", "el gato come\nel perro  come\n");
  write_file(dir / "b.txt", "el gat menja\n\tel gos menja\n");
  // a = {el, gato, come, perro}, b = {el, gat, menja, gos}: 1 of 7.
  CHECK(jaccard_similarity(dir / "a.txt", dir / "b.txt") == doctest::Approx(1.0 / 7.0).epsilon(1e-12));

  write_file(dir / "empty.txt", "\n  \n");
  CHECK_THROWS_AS(jaccard_similarity(dir / "a.txt", dir / "empty.txt"), ArgumentError);
  CHECK_THROWS_AS(jaccard_similarity(dir / "a.txt", dir / "missing.txt"), IoError);
}

TEST_CASE("pearson_correlation on hand-checked points") {
  CHECK(pearson_correlation({{1, 2}, {2, 4}, {3, 6}}) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pearson_correlation({{1, 6}, {2, 4}, {3, 2}}) == doctest::Approx(-1.0).epsilon(1e-12));
  // Covariance cancels exactly: (1,1),(2,2),(3,1).
  CHECK(pearson_correlation({{1, 1}, {2, 2}, {3, 1}}) == 0.0);

  // Invariant under positive affine maps of either coordinate.
  std::vector<std::pair<double, double>> pts = {{0.3, 12.4}, {1.7, 3.9}, {2.2, 8.8}, {5.1, 4.0}};
  std::vector<std::pair<double, double>> mapped;
  for (auto [x, y] : pts) mapped.push_back({2.5 * x + 7.0, 0.125 * y - 3.0});
  CHECK(pearson_correlation(mapped) ==
        doctest::Approx(pearson_correlation(pts)).epsilon(1e-12));

  CHECK_THROWS_AS(pearson_correlation({}), ArgumentError);
  CHECK_THROWS_AS(pearson_correlation({{1, 2}}), ArgumentError);
  CHECK_THROWS_AS(pearson_correlation({{1, 2}, {1, 3}}), NumericError);
  CHECK_THROWS_AS(pearson_correlation({{1, 2}, {3, 2}}), NumericError);
}

TEST_CASE("pearson_correlation matches the direct oracle on random points") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> coord(-5.0, 5.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::pair<double, double>> pts;
    for (int i = 0; i < 12; ++i) pts.push_back({coord(rng), coord(rng)});
    CHECK(pearson_correlation(pts) ==
          doctest::Approx(oracles::pearson_direct(pts)).epsilon(1e-12));
  }
}

TEST_CASE("spearman_correlation ranks before correlating") {
  // Monotone but wildly nonlinear.
  CHECK(spearman_correlation({{1, 1}, {2, 10}, {3, 100}, {4, 1000}}) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(spearman_correlation({{1, 1000}, {2, 100}, {3, 10}, {4, 1}}) ==
        doctest::Approx(-1.0).epsilon(1e-12));
  // Tied y values get the average rank: ranks y = 1.5, 1.5, 3 -> r = sqrt(3)/2.
  CHECK(spearman_correlation({{1, 5}, {2, 5}, {3, 7}}) ==
        doctest::Approx(std::sqrt(3.0) / 2.0).epsilon(1e-12));
  CHECK_THROWS_AS(spearman_correlation({{1, 2}}), ArgumentError);
  CHECK_THROWS_AS(spearman_correlation({{1, 2}, {2, 2}}), NumericError);
}

TEST_CASE("build_report joins results with corpus Jaccard per family") {
  fs::path dir = fresh_dir("report");
  fs::path corpora = dir / "corpora";
  fs::create_directories(corpora);
  // xx-yy shares {a, b} of {a, b, c, d, e, f}: Jaccard 1/3.
  write_file(corpora / "xx-yy.xx", "a b c d\n");
  write_file(corpora / "xx-yy.yy", "a b e f\n");
  // pp-qq is identical: Jaccard 1.
  write_file(corpora / "pp-qq.pp", "a b\n");
  write_file(corpora / "pp-qq.qq", "b a\n");

  write_file(dir / "results.csv",
             "pair,direction,family,bleu\n"
             "xx-yy,xx-yy,biling,10\n"
             "xx-yy,yy-xx,biling,20\n"
             "pp-qq,pp-qq,biling,30\n"
             "pp-qq,qq-pp,biling,28\n"
             "\n"
             "xx-yy,xx-yy,multi,5\n"
             "pp-qq,pp-qq,multi,22\n");

  SimilarityReport report = build_report(dir / "results.csv", corpora);
  REQUIRE(report.rows.size() == 6);
  CHECK_FALSE(report.spearman);

  // Sorted by direction label, then family.
  CHECK(report.rows[0].pair == "pp-qq");
  CHECK(report.rows[0].family == "biling");
  CHECK(report.rows[1].pair == "pp-qq");
  CHECK(report.rows[1].family == "multi");
  CHECK(report.rows[2].pair == "qq-pp");
  CHECK(report.rows[3].pair == "xx-yy");
  CHECK(report.rows[3].family == "biling");
  CHECK(report.rows[4].pair == "xx-yy");
  CHECK(report.rows[4].family == "multi");
  CHECK(report.rows[5].pair == "yy-xx");

  for (const SimilarityRow& row : report.rows) {
    if (row.corpus == "xx-yy")
      CHECK(row.jaccard == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    else
      CHECK(row.jaccard == 1.0);
  }

  REQUIRE(report.family_r.size() == 2);
  CHECK(report.family_r[0].first == "biling");
  CHECK(report.family_r[1].first == "multi");
  const double expected_biling = oracles::pearson_direct(
      {{100.0 / 3.0, 10}, {100.0 / 3.0, 20}, {100.0, 30}, {100.0, 28}});
  CHECK(report.family_r[0].second == doctest::Approx(expected_biling).epsilon(1e-12));
  // Two points with distinct coordinates correlate perfectly.
  CHECK(report.family_r[1].second == doctest::Approx(1.0).epsilon(1e-12));

  SimilarityReport ranked = build_report(dir / "results.csv", corpora, true);
  CHECK(ranked.spearman);
  REQUIRE(ranked.family_r.size() == 2);
  CHECK(ranked.family_r[1].second == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("build_report failure modes") {
  fs::path dir = fresh_dir("report_errors");
  fs::path corpora = dir / "corpora";
  fs::create_directories(corpora);
  write_file(corpora / "xx-yy.xx", "a\n");
  write_file(corpora / "xx-yy.yy", "a\n");

  write_file(dir / "missing.csv", "zz-ww,zz-ww,biling,10\n");
  try {
    build_report(dir / "missing.csv", corpora);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("zz-ww") != std::string::npos);
  }

  write_file(dir / "short.csv", "xx-yy,xx-yy,biling\n");
  CHECK_THROWS_AS(build_report(dir / "short.csv", corpora), FormatError);

  write_file(dir / "nan.csv", "xx-yy,xx-yy,biling,abc\n");
  CHECK_THROWS_AS(build_report(dir / "nan.csv", corpora), FormatError);

  write_file(dir / "badpair.csv", "xxyy,xxyy,biling,10\n");
  CHECK_THROWS_AS(build_report(dir / "badpair.csv", corpora), FormatError);

  // Constant Jaccard within a family: the correlation is undefined and says so.
  write_file(dir / "flat.csv",
             "xx-yy,xx-yy,biling,10\n"
             "xx-yy,yy-xx,biling,20\n");
  CHECK_THROWS_AS(build_report(dir / "flat.csv", corpora), NumericError);
}

TEST_CASE("write_report emits plot and summary CSVs") {
  SimilarityReport report;
  report.rows.push_back({"xx-yy", "xx-yy", 1.0 / 3.0, 10, "biling"});
  report.rows.push_back({"yy-xx", "xx-yy", 1.0 / 3.0, 20.5, "biling"});
  report.family_r.emplace_back("biling", 1.0);

  fs::path dir = fresh_dir("write");
  write_report(report, dir / "plot.csv", dir / "summary.csv");

  std::vector<std::string> plot = read_lines(dir / "plot.csv");
  REQUIRE(plot.size() == 3);
  CHECK(plot[0] == "pair,jaccard_x100,bleu,family");
  CHECK(plot[1] == "xx-yy,33.3333,10,biling");
  CHECK(plot[2] == "yy-xx,33.3333,20.5,biling");

  std::vector<std::string> summary = read_lines(dir / "summary.csv");
  REQUIRE(summary.size() == 2);
  CHECK(summary[0] == "family,pearson_r");
  CHECK(summary[1] == "biling,1");

  report.spearman = true;
  write_report(report, dir / "plot2.csv", dir / "summary2.csv");
  CHECK(read_lines(dir / "summary2.csv")[0] == "family,spearman_r");

  CHECK_THROWS_AS(write_report(report, dir / "no_dir" / "x.csv", dir / "y.csv"), IoError);
}
