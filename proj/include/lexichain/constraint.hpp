#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "lexichain/error.hpp"

namespace lexichain {

enum class MatchKind { exact, nearest_neighbor };

inline std::string_view to_string(MatchKind kind) {
  return kind == MatchKind::exact ? "exact" : "nearest_neighbor";
}

inline MatchKind match_kind_from_string(std::string_view s) {
  if (s == "exact") return MatchKind::exact;
  if (s == "nearest_neighbor") return MatchKind::nearest_neighbor;
  fail(ErrorKind::invalid_input, "unknown match kind '" + std::string(s) + "'");
}

/// A required (source word, target term) pair.
struct LexicalConstraint {
  std::string source_word;
  std::string target_term;
  MatchKind match_kind = MatchKind::exact;
  double similarity = 1.0;
  /// Dictionary key the term came from (differs from source_word for
  /// nearest-neighbor matches).
  std::string matched_entry;

  bool operator==(const LexicalConstraint&) const = default;
};

/// Ordered constraints injected into one sentence's prompts.
class ConstraintSet {
 public:
  ConstraintSet() = default;
  explicit ConstraintSet(std::vector<LexicalConstraint> items) {
    for (auto& c : items) add(std::move(c));
  }

  void add(LexicalConstraint c) {
    if (c.target_term.empty()) fail(ErrorKind::invalid_input, "constraint for '" + c.source_word + "' has an empty term");
    items_.push_back(std::move(c));
  }

  size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  const LexicalConstraint& operator[](size_t i) const { return items_[i]; }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }
  const std::vector<LexicalConstraint>& items() const { return items_; }

 private:
  std::vector<LexicalConstraint> items_;
};

}  // namespace lexichain
