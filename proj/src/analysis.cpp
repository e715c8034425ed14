#include "simtrans/analysis.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>

#include "simtrans/data.hpp"

namespace simtrans {

namespace {

std::set<std::string> token_set(const std::filesystem::path& path) {
  std::set<std::string> tokens;
  for (const std::string& line : read_lines(path)) {
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
      std::size_t j = i;
      while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
      if (j > i) tokens.insert(line.substr(i, j - i));
      i = j;
    }
  }
  return tokens;
}

double jaccard_of_sets(const std::set<std::string>& a, const std::set<std::string>& b) {
  if (a.empty() || b.empty())
    throw ArgumentError("jaccard_similarity: empty corpus has no token set");
  std::size_t intersection = 0;
  for (const std::string& token : a) intersection += b.count(token);
  const std::size_t united = a.size() + b.size() - intersection;
  return static_cast<double>(intersection) / static_cast<double>(united);
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(trim(line.substr(start)));
      return fields;
    }
    fields.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
}

std::vector<double> ranks(const std::vector<double>& values) {
  std::vector<std::size_t> order(values.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> out(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2 + 1;
    for (std::size_t k = i; k <= j; ++k) out[order[k]] = rank;
    i = j + 1;
  }
  return out;
}

}  // namespace

double jaccard_sets(const std::vector<std::string>& tokens_a,
                    const std::vector<std::string>& tokens_b) {
  return jaccard_of_sets({tokens_a.begin(), tokens_a.end()},
                         {tokens_b.begin(), tokens_b.end()});
}

double jaccard_similarity(const std::filesystem::path& corpus_a,
                          const std::filesystem::path& corpus_b) {
  return jaccard_of_sets(token_set(corpus_a), token_set(corpus_b));
}

double pearson_correlation(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 2)
    throw ArgumentError("pearson_correlation: need at least 2 points, got " +
                        std::to_string(points.size()));
  double mx = 0, my = 0;
  for (const auto& [x, y] : points) {
    mx += x;
    my += y;
  }
  mx /= static_cast<double>(points.size());
  my /= static_cast<double>(points.size());
  double sxx = 0, syy = 0, sxy = 0;
  for (const auto& [x, y] : points) {
    sxx += (x - mx) * (x - mx);
    syy += (y - my) * (y - my);
    sxy += (x - mx) * (y - my);
  }
  if (sxx == 0 || syy == 0)
    throw NumericError("pearson_correlation: zero variance, correlation undefined");
  return sxy / std::sqrt(sxx * syy);
}

double spearman_correlation(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 2)
    throw ArgumentError("spearman_correlation: need at least 2 points, got " +
                        std::to_string(points.size()));
  std::vector<double> xs, ys;
  xs.reserve(points.size());
  ys.reserve(points.size());
  for (const auto& [x, y] : points) {
    xs.push_back(x);
    ys.push_back(y);
  }
  const std::vector<double> rx = ranks(xs), ry = ranks(ys);
  std::vector<std::pair<double, double>> ranked(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) ranked[i] = {rx[i], ry[i]};
  try {
    return pearson_correlation(ranked);
  } catch (const NumericError&) {
    throw NumericError("spearman_correlation: constant ranks, correlation undefined");
  }
}

SimilarityReport build_report(const std::filesystem::path& results_file,
                              const std::filesystem::path& corpora_dir,
                              bool use_spearman) {
  const std::vector<std::string> lines = read_lines(results_file);
  SimilarityReport report;
  report.spearman = use_spearman;
  std::map<std::string, double> jaccard_cache;
  bool first_row = true;

  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string line = trim(lines[i]);
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_csv_row(line);
    if (fields.size() != 4)
      throw FormatError(results_file.string() + ":" + std::to_string(i + 1) +
                        ": expected 4 fields 'pair,direction,family,bleu', got " +
                        std::to_string(fields.size()));
    const bool header = first_row && fields[3] == "bleu";
    first_row = false;
    if (header) continue;

    const std::string& corpus_pair = fields[0];
    double bleu = 0;
    try {
      std::size_t used = 0;
      bleu = std::stod(fields[3], &used);
      if (used != fields[3].size()) throw std::invalid_argument(fields[3]);
    } catch (const std::exception&) {
      throw FormatError(results_file.string() + ":" + std::to_string(i + 1) +
                        ": BLEU value '" + fields[3] + "' is not a number");
    }

    auto cached = jaccard_cache.find(corpus_pair);
    if (cached == jaccard_cache.end()) {
      const std::size_t dash = corpus_pair.find('-');
      if (dash == std::string::npos || dash == 0 || dash + 1 == corpus_pair.size())
        throw FormatError(results_file.string() + ":" + std::to_string(i + 1) +
                          ": pair '" + corpus_pair + "' is not of the form xx-yy");
      const auto side_a = corpora_dir / (corpus_pair + "." + corpus_pair.substr(0, dash));
      const auto side_b = corpora_dir / (corpus_pair + "." + corpus_pair.substr(dash + 1));
      if (!std::filesystem::exists(side_a) || !std::filesystem::exists(side_b))
        throw DataError("no training corpora for pair '" + corpus_pair + "' (expected " +
                        side_a.string() + " and " + side_b.string() + ")");
      cached = jaccard_cache.emplace(corpus_pair, jaccard_similarity(side_a, side_b)).first;
    }

    report.rows.push_back({fields[1], corpus_pair, cached->second, bleu, fields[2]});
  }

  std::sort(report.rows.begin(), report.rows.end(),
            [](const SimilarityRow& a, const SimilarityRow& b) {
              return std::tie(a.pair, a.family) < std::tie(b.pair, b.family);
            });

  std::map<std::string, std::vector<std::pair<double, double>>> by_family;
  for (const SimilarityRow& row : report.rows)
    by_family[row.family].emplace_back(100.0 * row.jaccard, row.bleu);
  for (const auto& [family, points] : by_family)
    report.family_r.emplace_back(family, use_spearman ? spearman_correlation(points)
                                                      : pearson_correlation(points));
  return report;
}

void write_report(const SimilarityReport& report, const std::filesystem::path& out_csv,
                  const std::filesystem::path& summary_csv) {
  std::ofstream out(out_csv);
  if (!out) throw IoError("cannot open " + out_csv.string() + " for writing");
  out << "pair,jaccard_x100,bleu,family\n";
  char buf[160];
  for (const SimilarityRow& row : report.rows) {
    std::snprintf(buf, sizeof(buf), "%s,%.6g,%.6g,%s\n", row.pair.c_str(),
                  100.0 * row.jaccard, row.bleu, row.family.c_str());
    out << buf;
  }
  if (!out) throw IoError("write failed for " + out_csv.string());

  std::ofstream summary(summary_csv);
  if (!summary) throw IoError("cannot open " + summary_csv.string() + " for writing");
  summary << (report.spearman ? "family,spearman_r\n" : "family,pearson_r\n");
  for (const auto& [family, r] : report.family_r) {
    std::snprintf(buf, sizeof(buf), "%s,%.6g\n", family.c_str(), r);
    summary << buf;
  }
  if (!summary) throw IoError("write failed for " + summary_csv.string());
}

}  // namespace simtrans
