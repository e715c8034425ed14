#include "simtrans/data.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "simtrans/rng.hpp"

namespace simtrans {

namespace {

bool is_punct_symbol(const std::string& symbol) {
  if (symbol.size() == 1) {
    const unsigned char c = static_cast<unsigned char>(symbol[0]);
    return c < 0x80 && std::ispunct(c);
  }
  // Common multi-byte punctuation seen in the supported languages.
  static const std::set<std::string> kPunct = {
      "¡", "¿", "«", "»", "‘", "’",
      "“", "”", "–", "—", "…"};
  return kPunct.count(symbol) > 0;
}

}  // namespace

std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> tokens;
  std::size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
    std::size_t end = pos;
    while (end < line.size() && !std::isspace(static_cast<unsigned char>(line[end]))) ++end;
    if (end == pos) break;

    const std::vector<std::string> symbols = utf8_split(line.substr(pos, end - pos));
    std::size_t first = 0;
    while (first < symbols.size() && is_punct_symbol(symbols[first])) ++first;
    std::size_t last = symbols.size();
    while (last > first && is_punct_symbol(symbols[last - 1])) --last;

    for (std::size_t i = 0; i < first; ++i) tokens.push_back(symbols[i]);
    if (first < last) {
      std::string core;
      for (std::size_t i = first; i < last; ++i) core += symbols[i];
      tokens.push_back(core);
    }
    for (std::size_t i = last; i < symbols.size(); ++i) tokens.push_back(symbols[i]);
    pos = end;
  }
  return tokens;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& line : lines) out << line << "\n";
}

ParallelCorpus load_parallel(const std::filesystem::path& src_path,
                             const std::filesystem::path& tgt_path,
                             const std::string& src_lang, const std::string& tgt_lang) {
  const std::vector<std::string> src_lines = read_lines(src_path);
  const std::vector<std::string> tgt_lines = read_lines(tgt_path);
  if (src_lines.size() != tgt_lines.size())
    throw DataError("line count mismatch " + std::to_string(src_lines.size()) + " vs " +
                    std::to_string(tgt_lines.size()) + " (" + src_path.string() + ", " +
                    tgt_path.string() + ")");
  ParallelCorpus corpus;
  corpus.source_lang = src_lang;
  corpus.target_lang = tgt_lang;
  corpus.pairs.reserve(src_lines.size());
  for (std::size_t i = 0; i < src_lines.size(); ++i)
    corpus.pairs.emplace_back(tokenize(src_lines[i]), tokenize(tgt_lines[i]));
  return corpus;
}

TokenCorpus load_mono(const std::filesystem::path& path) {
  TokenCorpus corpus;
  for (const auto& line : read_lines(path)) corpus.push_back(tokenize(line));
  return corpus;
}

ParallelCorpus clean(const ParallelCorpus& corpus, int max_len) {
  if (max_len < 1) throw ArgumentError("clean: max_len must be >= 1");
  ParallelCorpus out;
  out.source_lang = corpus.source_lang;
  out.target_lang = corpus.target_lang;
  for (const auto& pair : corpus.pairs) {
    const std::size_t limit = static_cast<std::size_t>(max_len);
    if (pair.first.empty() || pair.second.empty()) continue;
    if (pair.first.size() > limit || pair.second.size() > limit) continue;
    out.pairs.push_back(pair);
  }
  return out;
}

ParallelCorpus tag_multilingual(const ParallelCorpus& corpus, const std::string& tag) {
  if (!is_language_tag(tag))
    throw ArgumentError("tag_multilingual: malformed tag \"" + tag +
                        "\" (expected \"<2xx>\")");
  for (const auto& pair : corpus.pairs)
    if (!pair.first.empty() && is_language_tag(pair.first.front()))
      throw ArgumentError("tag_multilingual: corpus already tagged (first source token " +
                          pair.first.front() + ")");
  ParallelCorpus out;
  out.source_lang = corpus.source_lang;
  out.target_lang = corpus.target_lang;
  out.pairs.reserve(corpus.size());
  for (const auto& pair : corpus.pairs) {
    std::vector<std::string> tagged;
    tagged.reserve(pair.first.size() + 1);
    tagged.push_back(tag);
    tagged.insert(tagged.end(), pair.first.begin(), pair.first.end());
    out.pairs.emplace_back(std::move(tagged), pair.second);
  }
  return out;
}

Index Batch::source_length(Index row) const {
  Index n = 0;
  while (n < source_mask.cols() && source_mask(row, n)) ++n;
  return n;
}

Index Batch::target_length(Index row) const {
  Index n = 0;
  while (n < target_mask.cols() && target_mask(row, n)) ++n;
  return n;
}

std::vector<Batch> make_batches(const ParallelCorpus& corpus, const Vocab& vocab,
                                long long max_tokens, std::uint64_t seed) {
  if (max_tokens < 1) throw ArgumentError("make_batches: max_tokens must be >= 1");
  for (const auto& pair : corpus.pairs)
    if (static_cast<long long>(pair.first.size()) > max_tokens ||
        static_cast<long long>(pair.second.size()) > max_tokens)
      throw DataError("make_batches: sentence longer than max_tokens budget; clean first");
  if (corpus.pairs.empty()) return {};

  std::vector<int> order(corpus.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  Rng rng(seed);
  rng.shuffle(order);
  // Bucket by target length; the stable sort keeps the shuffled order inside
  // each length class.
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return corpus.pairs[a].second.size() < corpus.pairs[b].second.size();
  });

  std::vector<std::vector<int>> groups;
  long long budget_used = 0;
  for (int idx : order) {
    const long long len = static_cast<long long>(corpus.pairs[idx].second.size());
    if (groups.empty() || budget_used + len > max_tokens) {
      groups.emplace_back();
      budget_used = 0;
    }
    groups.back().push_back(idx);
    budget_used += len;
  }
  rng.shuffle(groups);

  std::vector<Batch> batches;
  batches.reserve(groups.size());
  for (const auto& group : groups) {
    Index max_src = 0, max_tgt = 0;
    for (int idx : group) {
      max_src = std::max<Index>(max_src, corpus.pairs[idx].first.size());
      max_tgt = std::max<Index>(max_tgt, corpus.pairs[idx].second.size());
    }
    Batch batch;
    const Index rows = static_cast<Index>(group.size());
    batch.source = IntMatrix::Constant(rows, max_src, Vocab::kPadId);
    batch.target = IntMatrix::Constant(rows, max_tgt, Vocab::kPadId);
    batch.source_mask = BoolMatrix::Constant(rows, max_src, false);
    batch.target_mask = BoolMatrix::Constant(rows, max_tgt, false);
    batch.pair_indices = group;
    for (Index r = 0; r < rows; ++r) {
      const auto& pair = corpus.pairs[group[r]];
      const std::vector<int> src_ids = vocab.encode(pair.first);
      const std::vector<int> tgt_ids = vocab.encode(pair.second);
      for (std::size_t c = 0; c < src_ids.size(); ++c) {
        batch.source(r, static_cast<Index>(c)) = src_ids[c];
        batch.source_mask(r, static_cast<Index>(c)) = true;
      }
      for (std::size_t c = 0; c < tgt_ids.size(); ++c) {
        batch.target(r, static_cast<Index>(c)) = tgt_ids[c];
        batch.target_mask(r, static_cast<Index>(c)) = true;
      }
    }
    batches.push_back(std::move(batch));
  }
  return batches;
}

}  // namespace simtrans
