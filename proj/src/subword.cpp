#include "simtrans/subword.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

namespace simtrans {

namespace {

constexpr const char* kBpeFileHeader = "#version: simtrans-bpe 1";

int utf8_sequence_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  if ((lead >> 3) == 0x1E) return 4;
  return 1;  // continuation or invalid byte: pass through alone
}

// One merge pass: left-first, non-overlapping.
void merge_pair(std::vector<std::string>& symbols, const std::string& left,
                const std::string& right) {
  std::vector<std::string> out;
  out.reserve(symbols.size());
  std::size_t i = 0;
  while (i < symbols.size()) {
    if (i + 1 < symbols.size() && symbols[i] == left && symbols[i + 1] == right) {
      out.push_back(left + right);
      i += 2;
    } else {
      out.push_back(std::move(symbols[i]));
      i += 1;
    }
  }
  symbols = std::move(out);
}

}  // namespace

std::vector<std::string> utf8_split(const std::string& word) {
  std::vector<std::string> symbols;
  std::size_t i = 0;
  while (i < word.size()) {
    std::size_t len = utf8_sequence_length(static_cast<unsigned char>(word[i]));
    if (i + len > word.size()) len = 1;
    symbols.push_back(word.substr(i, len));
    i += len;
  }
  return symbols;
}

bool is_language_tag(const std::string& token) {
  if (token.size() < 5 || token.front() != '<' || token[1] != '2' || token.back() != '>')
    return false;
  for (std::size_t i = 2; i + 1 < token.size(); ++i)
    if (token[i] < 'a' || token[i] > 'z') return false;
  return true;
}

void BpeModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write BPE model to " + path.string());
  out << kBpeFileHeader << "\n";
  for (const auto& [left, right] : merges) out << left << " " << right << "\n";
}

BpeModel BpeModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read BPE model from " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kBpeFileHeader)
    throw FormatError("BPE model " + path.string() + ": missing header \"" +
                      kBpeFileHeader + "\"");
  BpeModel model;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::size_t space = line.find(' ');
    if (space == std::string::npos || space == 0 || space + 1 >= line.size())
      throw FormatError("BPE model " + path.string() + ": bad merge line \"" + line + "\"");
    model.merges.emplace_back(line.substr(0, space), line.substr(space + 1));
  }
  return model;
}

BpeModel learn_bpe(const TokenCorpus& corpus, int num_merges) {
  if (corpus.empty()) throw ArgumentError("learn_bpe: empty corpus");
  if (num_merges < 0) throw ArgumentError("learn_bpe: num_merges must be >= 0");

  // Word types with frequencies; std::map keeps iteration deterministic.
  std::map<std::string, long long> word_freq;
  for (const auto& sentence : corpus)
    for (const auto& word : sentence) ++word_freq[word];

  struct Type {
    std::vector<std::string> symbols;
    long long freq;
  };
  std::vector<Type> types;
  types.reserve(word_freq.size());
  for (const auto& [word, freq] : word_freq) types.push_back({utf8_split(word), freq});

  BpeModel model;
  using Pair = std::pair<std::string, std::string>;
  for (int m = 0; m < num_merges; ++m) {
    std::map<Pair, long long> counts;
    for (const auto& type : types)
      for (std::size_t i = 0; i + 1 < type.symbols.size(); ++i)
        counts[{type.symbols[i], type.symbols[i + 1]}] += type.freq;
    if (counts.empty()) break;

    // Max count; map order already delivers the lexicographically smallest
    // pair first among ties.
    auto best = counts.begin();
    for (auto it = counts.begin(); it != counts.end(); ++it)
      if (it->second > best->second) best = it;
    if (best->second < 2) break;

    model.merges.push_back(best->first);
    for (auto& type : types) merge_pair(type.symbols, best->first.first, best->first.second);
  }
  return model;
}

std::vector<std::string> apply_bpe(const std::vector<std::string>& sentence,
                                   const BpeModel& model) {
  std::vector<std::string> out;
  for (const auto& word : sentence) {
    std::vector<std::string> symbols = utf8_split(word);
    for (const auto& [left, right] : model.merges) {
      if (symbols.size() < 2) break;
      merge_pair(symbols, left, right);
    }
    for (std::size_t i = 0; i < symbols.size(); ++i)
      out.push_back(i + 1 < symbols.size() ? symbols[i] + model.marker : symbols[i]);
  }
  return out;
}

std::vector<std::string> revert_bpe(const std::vector<std::string>& tokens,
                                    int* trailing_marker_warnings) {
  static const std::string marker = "@@";
  std::vector<std::string> words;
  std::string pending;
  bool joining = false;
  for (const auto& token : tokens) {
    const bool continues = token.size() >= marker.size() &&
                           token.compare(token.size() - marker.size(),
                                         marker.size(), marker) == 0;
    if (continues) {
      pending += token.substr(0, token.size() - marker.size());
      joining = true;
    } else {
      words.push_back(pending + token);
      pending.clear();
      joining = false;
    }
  }
  if (joining) {
    words.push_back(pending);  // trailing marker: join as-is, flag it
    if (trailing_marker_warnings) ++*trailing_marker_warnings;
  }
  return words;
}

int Vocab::id_of(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnkId : it->second;
}

const std::string& Vocab::token_of(int id) const {
  if (id < 0 || id >= size())
    throw ArgumentError("Vocab: id " + std::to_string(id) + " out of range");
  return tokens_[id];
}

std::vector<int> Vocab::encode(const std::vector<std::string>& tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& token : tokens) ids.push_back(id_of(token));
  return ids;
}

std::vector<std::string> Vocab::decode(const std::vector<int>& ids) const {
  std::vector<std::string> tokens;
  tokens.reserve(ids.size());
  for (int id : ids) tokens.push_back(token_of(id));
  return tokens;
}

std::vector<std::string> Vocab::language_tags() const {
  std::vector<std::string> tags;
  for (const auto& token : tokens_)
    if (is_language_tag(token)) tags.push_back(token);
  return tags;
}

void Vocab::push(const std::string& token) {
  if (index_.count(token)) return;
  index_[token] = static_cast<int>(tokens_.size());
  tokens_.push_back(token);
}

void Vocab::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write vocab to " + path.string());
  for (int id = 0; id < size(); ++id) out << tokens_[id] << "\t" << id << "\n";
}

Vocab Vocab::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read vocab from " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos)
      throw FormatError("vocab " + path.string() + " line " + std::to_string(lineno) +
                        ": expected token<TAB>id");
    const std::string token = line.substr(0, tab);
    int id = 0;
    try {
      id = std::stoi(line.substr(tab + 1));
    } catch (const std::exception&) {
      throw FormatError("vocab " + path.string() + " line " + std::to_string(lineno) +
                        ": bad id");
    }
    if (id != static_cast<int>(tokens.size()))
      throw FormatError("vocab " + path.string() + ": ids must be contiguous from 0");
    tokens.push_back(token);
  }
  const char* expected[] = {kPadToken, kBosToken, kEosToken, kUnkToken};
  for (int id = 0; id < 4; ++id)
    if (static_cast<int>(tokens.size()) <= id || tokens[id] != expected[id])
      throw FormatError("vocab " + path.string() + ": reserved token " +
                        std::string(expected[id]) + " missing at id " + std::to_string(id));
  Vocab vocab;
  for (const auto& token : tokens) {
    if (vocab.contains(token))
      throw FormatError("vocab " + path.string() + ": duplicate token " + token);
    vocab.push(token);
  }
  return vocab;
}

Vocab build_vocab(const std::vector<const TokenCorpus*>& corpora,
                  const std::vector<std::string>& language_tags) {
  if (corpora.empty()) throw ArgumentError("build_vocab: at least one corpus required");

  std::map<std::string, long long> freq;
  for (const TokenCorpus* corpus : corpora)
    for (const auto& sentence : *corpus)
      for (const auto& token : sentence) ++freq[token];

  Vocab vocab;
  vocab.push(Vocab::kPadToken);
  vocab.push(Vocab::kBosToken);
  vocab.push(Vocab::kEosToken);
  vocab.push(Vocab::kUnkToken);
  for (const auto& tag : language_tags) vocab.push(tag);

  std::vector<std::pair<std::string, long long>> by_freq(freq.begin(), freq.end());
  std::stable_sort(by_freq.begin(), by_freq.end(),
                   [](const auto& a, const auto& b) {
                     if (a.second != b.second) return a.second > b.second;
                     return a.first < b.first;
                   });
  for (const auto& [token, _] : by_freq) vocab.push(token);
  return vocab;
}

}  // namespace simtrans
