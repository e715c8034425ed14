#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "simtrans/errors.hpp"

namespace simtrans {

// |A ∩ B| / |A ∪ B| over distinct-token sets; duplicates in the inputs are
// collapsed. Both sides must contribute at least one token.
double jaccard_sets(const std::vector<std::string>& tokens_a,
                    const std::vector<std::string>& tokens_b);

// Token sets are the distinct whitespace-delimited tokens of each file.
double jaccard_similarity(const std::filesystem::path& corpus_a,
                          const std::filesystem::path& corpus_b);

// Sample Pearson correlation; needs >= 2 points and nonzero variance on both
// coordinates.
double pearson_correlation(const std::vector<std::pair<double, double>>& points);

// Rank correlation (average ranks on ties) via Pearson on the ranks.
double spearman_correlation(const std::vector<std::pair<double, double>>& points);

struct SimilarityRow {
  std::string pair;    // direction label, e.g. "ca-es"
  std::string corpus;  // corpus pair whose training files gave the Jaccard
  double jaccard = 0;  // in [0, 1]
  double bleu = 0;
  std::string family;  // e.g. "bilingual" or "multilingual"
};

struct SimilarityReport {
  std::vector<SimilarityRow> rows;  // sorted by pair name, then family
  std::vector<std::pair<std::string, double>> family_r;  // per model family
  bool spearman = false;
};

// Joins a results CSV ("pair,direction,family,bleu") with per-pair Jaccard
// similarities computed from "<pair>.<lang>" training files in corpora_dir,
// and correlates BLEU with Jaccard x 100 within each model family.
SimilarityReport build_report(const std::filesystem::path& results_file,
                              const std::filesystem::path& corpora_dir,
                              bool use_spearman = false);

// Plot-data CSV ("pair,jaccard_x100,bleu,family") plus a summary CSV with one
// correlation row per family.
void write_report(const SimilarityReport& report, const std::filesystem::path& out_csv,
                  const std::filesystem::path& summary_csv);

}  // namespace simtrans
