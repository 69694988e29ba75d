#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "lexichain/constraint.hpp"
#include "lexichain/embedding.hpp"
#include "lexichain/error.hpp"
#include "lexichain/gateway.hpp"
#include "lexichain/sentence.hpp"
#include "lexichain/unicode.hpp"

namespace lexichain {

inline constexpr double kDefaultNnThreshold = 0.6;

/// A source word and its candidate translations, in file order.
struct DictionaryEntry {
  std::string key;       // case-folded
  std::string original;  // first spelling seen
  std::vector<std::string> translations;

  bool operator==(const DictionaryEntry&) const = default;
};

class LexiconIndex;

struct IngestResult;
IngestResult ingest_dictionary(std::istream& in, std::string src_lang, std::string tgt_lang);

struct EmbedResult;
EmbedResult embed_all(const LexiconIndex& index, EmbeddingBackend& embedder,
                      const std::optional<std::filesystem::path>& cache_path);

LexiconIndex load_index(const std::filesystem::path& path);

/// Dictionary entries plus one unit vector for every source key and every
/// translation. Entries are scanned exhaustively, so nearest-neighbor
/// answers are exact. Immutable once built.
class LexiconIndex {
 public:
  const std::string& src_lang() const { return src_lang_; }
  const std::string& tgt_lang() const { return tgt_lang_; }
  const std::vector<DictionaryEntry>& entries() const { return entries_; }
  size_t size() const { return entries_.size(); }

  /// Case-folded lookup.
  const DictionaryEntry* find(std::string_view word) const {
    auto it = position_.find(unicode::casefold(word));
    return it == position_.end() ? nullptr : &entries_[it->second];
  }

  bool has_vectors() const { return dim_ > 0; }
  size_t dim() const { return dim_; }
  const std::string& embedder_id() const { return embedder_id_; }
  size_t vector_count() const { return row_of_.size(); }

  /// Stored unit vector of a word, if any.
  std::optional<std::span<const double>> vector_of(const std::string& word) const {
    auto it = row_of_.find(word);
    if (it == row_of_.end()) return std::nullopt;
    return row(it->second);
  }

  std::span<const double> entry_vector(size_t entry) const { return row(entry_rows_[entry]); }

  void save(const std::filesystem::path& path) const {
    if (path.has_parent_path()) {
      std::error_code ec;
      std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::io, "cannot write index " + path.string());
    nlohmann::json header = {{"format", "lexichain-index/1"}, {"src_lang", src_lang_}, {"tgt_lang", tgt_lang_},
                             {"dim", dim_}, {"embedder", embedder_id_}, {"entries", entries_.size()},
                             {"vectors", row_of_.size()}};
    out << header.dump() << '\n';
    for (const auto& e : entries_) {
      out << nlohmann::json{{"key", e.key}, {"original", e.original}, {"translations", e.translations}}.dump() << '\n';
    }
    std::vector<std::pair<std::string, size_t>> rows(row_of_.begin(), row_of_.end());
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.second < b.second; });
    for (const auto& [word, r] : rows) {
      auto v = row(r);
      out << nlohmann::json{{"word", word}, {"v", std::vector<double>(v.begin(), v.end())}}.dump() << '\n';
    }
    if (!out) fail(ErrorKind::io, "failed writing index " + path.string());
  }

 private:
  friend IngestResult ingest_dictionary(std::istream&, std::string, std::string);
  friend EmbedResult embed_all(const LexiconIndex&, EmbeddingBackend&, const std::optional<std::filesystem::path>&);
  friend LexiconIndex load_index(const std::filesystem::path&);

  std::span<const double> row(size_t r) const { return std::span<const double>(matrix_).subspan(r * dim_, dim_); }

  void add_entry_translation(const std::string& source, const std::string& target) {
    std::string key = unicode::casefold(source);
    auto [it, inserted] = position_.try_emplace(key, entries_.size());
    if (inserted) entries_.push_back({key, source, {}});
    auto& translations = entries_[it->second].translations;
    if (std::find(translations.begin(), translations.end(), target) == translations.end()) {
      translations.push_back(target);
    }
  }

  size_t add_vector(const std::string& word, std::span<const double> unit) {
    auto [it, inserted] = row_of_.try_emplace(word, row_of_.size());
    if (inserted) matrix_.insert(matrix_.end(), unit.begin(), unit.end());
    return it->second;
  }

  void link_entry_rows() {
    entry_rows_.clear();
    for (const auto& e : entries_) {
      auto it = row_of_.find(e.key);
      if (it == row_of_.end()) fail(ErrorKind::index_build, "no vector for dictionary entry '" + e.key + "'");
      entry_rows_.push_back(it->second);
      for (const auto& t : e.translations) {
        if (!row_of_.contains(t)) fail(ErrorKind::index_build, "no vector for translation '" + t + "'");
      }
    }
  }

  std::string src_lang_;
  std::string tgt_lang_;
  std::vector<DictionaryEntry> entries_;
  std::unordered_map<std::string, size_t> position_;

  size_t dim_ = 0;
  std::string embedder_id_;
  std::vector<double> matrix_;
  std::unordered_map<std::string, size_t> row_of_;
  std::vector<size_t> entry_rows_;
};

struct IngestResult {
  LexiconIndex index;
  size_t accepted_lines = 0;
  size_t skipped_lines = 0;
};

namespace detail {

inline std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  if (line.find('\t') != std::string::npos) {
    // Tab-separated lines may carry multi-word targets.
    size_t start = 0;
    while (true) {
      const size_t tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    for (auto& f : fields) {
      const auto b = f.find_first_not_of(' ');
      f = b == std::string::npos ? std::string{} : f.substr(b, f.find_last_not_of(' ') - b + 1);
    }
    return fields;
  }
  std::istringstream in(line);
  std::string f;
  while (in >> f) fields.push_back(f);
  return fields;
}

inline bool has_whitespace(std::string_view s) {
  for (char32_t c : unicode::decode(s)) {
    if (unicode::is_whitespace(c)) return true;
  }
  return false;
}

}  // namespace detail

/// Parses `source<TAB or space>target` lines. Repeated sources accumulate
/// translations. Blank and malformed lines are skipped and counted.
inline IngestResult ingest_dictionary(std::istream& in, std::string src_lang, std::string tgt_lang) {
  IngestResult result;
  result.index.src_lang_ = std::move(src_lang);
  result.index.tgt_lang_ = std::move(tgt_lang);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto fields = detail::split_fields(line);
    if (fields.size() != 2 || fields[0].empty() || fields[1].empty() || detail::has_whitespace(fields[0])) {
      ++result.skipped_lines;
      continue;
    }
    result.index.add_entry_translation(fields[0], fields[1]);
    ++result.accepted_lines;
  }
  if (result.accepted_lines == 0) fail(ErrorKind::empty_dictionary, "dictionary has no valid lines");
  return result;
}

inline IngestResult ingest_dictionary(const std::filesystem::path& path, std::string src_lang, std::string tgt_lang) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot read dictionary " + path.string());
  try {
    return ingest_dictionary(in, std::move(src_lang), std::move(tgt_lang));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::empty_dictionary) fail(e.kind(), std::string(e.what()) + ": " + path.string());
    throw;
  }
}

/// JSON-lines sidecar of embeddings keyed by (embedder id, word).
class EmbeddingCache {
 public:
  EmbeddingCache(std::filesystem::path path, std::string embedder_id)
      : path_(std::move(path)), embedder_id_(std::move(embedder_id)) {
    std::ifstream in(path_, std::ios::binary);
    if (!in) return;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      try {
        auto j = nlohmann::json::parse(line);
        if (j.at("embedder").get<std::string>() != embedder_id_) continue;
        auto v = j.at("v").get<std::vector<double>>();
        if (v.size() != j.at("dim").get<size_t>()) fail(ErrorKind::index_build, "dim field disagrees with vector");
        vectors_.insert_or_assign(j.at("word").get<std::string>(), EmbeddingVector(std::move(v)));
      } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::index_build, "malformed cache line " + std::to_string(lineno) + " in " + path_.string());
      }
    }
  }

  const EmbeddingVector* find(const std::string& word) const {
    auto it = vectors_.find(word);
    return it == vectors_.end() ? nullptr : &it->second;
  }

  void append(const std::vector<std::pair<std::string, EmbeddingVector>>& fresh) {
    if (fresh.empty()) return;
    std::ofstream out(path_, std::ios::app | std::ios::binary);
    if (!out) fail(ErrorKind::io, "cannot append to embedding cache " + path_.string());
    for (const auto& [word, v] : fresh) {
      nlohmann::json j = {{"embedder", embedder_id_}, {"word", word}, {"dim", v.dim()},
                          {"v", std::vector<double>(v.values().begin(), v.values().end())}};
      out << j.dump() << '\n';
      vectors_.insert_or_assign(word, v);
    }
  }

  size_t size() const { return vectors_.size(); }

 private:
  std::filesystem::path path_;
  std::string embedder_id_;
  std::unordered_map<std::string, EmbeddingVector> vectors_;
};

struct EmbedResult {
  LexiconIndex index;
  size_t computed = 0;   // words sent to the embedder
  size_t cache_hits = 0;
};

inline constexpr size_t kEmbedBatch = 256;

/// Embeds every source key and translation, normalizing to unit length.
/// Cached vectors are reused and fresh ones appended to the sidecar.
inline EmbedResult embed_all(const LexiconIndex& base, EmbeddingBackend& embedder,
                             const std::optional<std::filesystem::path>& cache_path) {
  EmbedResult result{base, 0, 0};
  LexiconIndex& index = result.index;
  index.matrix_.clear();
  index.row_of_.clear();
  index.dim_ = 0;
  index.embedder_id_ = embedder.id();

  std::vector<std::string> words;
  std::unordered_set<std::string> seen;
  for (const auto& e : index.entries_) {
    if (seen.insert(e.key).second) words.push_back(e.key);
    for (const auto& t : e.translations) {
      if (seen.insert(t).second) words.push_back(t);
    }
  }

  std::optional<EmbeddingCache> cache;
  if (cache_path) cache.emplace(*cache_path, index.embedder_id_);

  std::vector<std::optional<EmbeddingVector>> vectors(words.size());
  std::vector<size_t> missing;
  for (size_t i = 0; i < words.size(); ++i) {
    if (const EmbeddingVector* v = cache ? cache->find(words[i]) : nullptr) {
      vectors[i] = *v;
      ++result.cache_hits;
    } else {
      missing.push_back(i);
    }
  }

  std::vector<std::pair<std::string, EmbeddingVector>> fresh;
  for (size_t b = 0; b < missing.size(); b += kEmbedBatch) {
    std::vector<std::string> batch;
    for (size_t i = b; i < std::min(missing.size(), b + kEmbedBatch); ++i) batch.push_back(words[missing[i]]);
    auto got = embedder.embed(batch);
    if (got.size() != batch.size()) fail(ErrorKind::protocol, "embedder returned the wrong number of vectors");
    for (size_t i = 0; i < batch.size(); ++i) {
      if (got[i].norm() == 0.0) fail(ErrorKind::index_build, "embedder returned a zero vector for '" + batch[i] + "'");
      vectors[missing[b + i]] = got[i].normalized();
      fresh.emplace_back(batch[i], *vectors[missing[b + i]]);
    }
    result.computed += batch.size();
  }

  for (size_t i = 0; i < words.size(); ++i) {
    const EmbeddingVector& v = *vectors[i];
    if (index.dim_ == 0) index.dim_ = v.dim();
    if (v.dim() != index.dim_) {
      fail(ErrorKind::index_build, "embedding dimension changed from " + std::to_string(index.dim_) + " to " +
                                       std::to_string(v.dim()) + " at '" + words[i] + "'");
    }
    const EmbeddingVector unit = v.normalized();
    index.add_vector(words[i], unit.values());
  }
  index.link_entry_rows();
  if (cache) cache->append(fresh);
  return result;
}

inline LexiconIndex load_index(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot read index " + path.string());
  LexiconIndex index;
  std::string line;
  try {
    if (!std::getline(in, line)) fail(ErrorKind::index_build, "empty index file " + path.string());
    auto header = nlohmann::json::parse(line);
    if (header.value("format", "") != "lexichain-index/1") fail(ErrorKind::index_build, "unknown index format");
    index.src_lang_ = header.at("src_lang").get<std::string>();
    index.tgt_lang_ = header.at("tgt_lang").get<std::string>();
    index.dim_ = header.at("dim").get<size_t>();
    index.embedder_id_ = header.at("embedder").get<std::string>();
    const auto n_entries = header.at("entries").get<size_t>();
    const auto n_vectors = header.at("vectors").get<size_t>();
    for (size_t i = 0; i < n_entries; ++i) {
      if (!std::getline(in, line)) fail(ErrorKind::index_build, "truncated index file " + path.string());
      auto j = nlohmann::json::parse(line);
      DictionaryEntry e{j.at("key").get<std::string>(), j.at("original").get<std::string>(),
                        j.at("translations").get<std::vector<std::string>>()};
      if (e.translations.empty()) fail(ErrorKind::index_build, "entry '" + e.key + "' has no translations");
      index.position_.emplace(e.key, index.entries_.size());
      index.entries_.push_back(std::move(e));
    }
    for (size_t i = 0; i < n_vectors; ++i) {
      if (!std::getline(in, line)) fail(ErrorKind::index_build, "truncated index file " + path.string());
      auto j = nlohmann::json::parse(line);
      auto v = j.at("v").get<std::vector<double>>();
      if (v.size() != index.dim_) fail(ErrorKind::index_build, "vector dimension disagrees with header");
      index.add_vector(j.at("word").get<std::string>(), v);
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::index_build, "malformed index " + path.string() + ": " + e.what());
  }
  if (index.dim_ > 0) index.link_entry_rows();
  return index;
}

namespace detail {

/// argmax over the entry's translations; first listed wins ties.
inline std::pair<std::string, double> best_translation(const LexiconIndex& index, const DictionaryEntry& entry,
                                                       std::span<const double> query) {
  size_t best = 0;
  double best_sim = -2.0;
  for (size_t i = 0; i < entry.translations.size(); ++i) {
    const double sim = dot(query, *index.vector_of(entry.translations[i]));
    if (sim > best_sim) {
      best_sim = sim;
      best = i;
    }
  }
  return {entry.translations[best], best_sim};
}

}  // namespace detail

/// Maps a keyword to a target term: exact case-folded lookup first, then the
/// nearest dictionary key by cosine similarity if it clears `threshold`.
/// Among the matched entry's translations the one closest to the keyword
/// vector wins.
inline std::optional<LexicalConstraint> resolve(const std::string& keyword, const LexiconIndex& index,
                                                EmbeddingBackend& embedder, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) fail(ErrorKind::invalid_input, "threshold must lie in [0,1]");
  if (!index.has_vectors()) fail(ErrorKind::invalid_input, "index has no vectors");

  if (const DictionaryEntry* entry = index.find(keyword)) {
    auto [term, sim] = detail::best_translation(index, *entry, *index.vector_of(entry->key));
    return LexicalConstraint{keyword, term, MatchKind::exact, 1.0, entry->key};
  }

  const std::string key = unicode::casefold(keyword);
  auto got = embedder.embed(std::span<const std::string>(&key, 1));
  if (got.size() != 1) fail(ErrorKind::protocol, "embedder returned the wrong number of vectors");
  if (got[0].dim() != index.dim()) {
    fail(ErrorKind::invalid_input, "query dimension " + std::to_string(got[0].dim()) + " does not match index dimension " +
                                       std::to_string(index.dim()));
  }
  const EmbeddingVector query = got[0].normalized();

  size_t best = 0;
  double best_sim = -2.0;
  for (size_t i = 0; i < index.size(); ++i) {
    const double sim = dot(query.values(), index.entry_vector(i));
    if (sim > best_sim) {
      best_sim = sim;
      best = i;
    }
  }
  best_sim = std::clamp(best_sim, -1.0, 1.0);
  if (index.size() == 0 || best_sim < threshold) return std::nullopt;
  const DictionaryEntry& entry = index.entries()[best];
  auto [term, sim] = detail::best_translation(index, entry, query.values());
  return LexicalConstraint{keyword, term, MatchKind::nearest_neighbor, best_sim, entry.key};
}

/// Resolves each distinct keyword (by case-folded form) in sentence order,
/// dropping those without a dictionary match.
inline ConstraintSet build_constraints(const KeywordSelection& selection, const LexiconIndex& index,
                                       EmbeddingBackend& embedder, double threshold) {
  ConstraintSet out;
  std::unordered_set<std::string> seen;
  for (const auto& kw : selection.keywords) {
    if (!seen.insert(unicode::casefold(kw.word)).second) continue;
    if (auto c = resolve(kw.word, index, embedder, threshold)) out.add(std::move(*c));
  }
  return out;
}

}  // namespace lexichain
