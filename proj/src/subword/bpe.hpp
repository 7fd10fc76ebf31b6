// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace cgnmt::subword {

inline const std::string kEndOfWord = "</w>";
inline const std::string kContinuation = "@@";

using Merge = std::pair<std::string, std::string>;
using WordCounts = std::map<std::string, std::uint64_t>;
using SymbolState = std::map<std::string, std::vector<std::string>>;

WordCounts count_words(const std::vector<std::string>& lines);

/// Initial learner symbols: one per character, the last carrying the end-of-word marker.
std::vector<std::string> initial_symbols(std::string_view word);

/// Merges `pair` at every non-overlapping occurrence, scanning left to right.
bool merge_symbols(std::vector<std::string>& symbols, const Merge& pair);

/// Ordered merge list produced by the greedy learner.
class BpeModel {
 public:
  BpeModel() = default;
  explicit BpeModel(std::vector<Merge> merges);

  /// Up to `num_merges` merges of the most frequent adjacent pair (ties go to the
  /// lexicographically smallest pair). Stops once no pair occurs twice.
  /// `final_state` receives the learner's symbols per word type.
  static BpeModel learn(const WordCounts& words, std::size_t num_merges, SymbolState* final_state = nullptr);

  const std::vector<Merge>& merges() const noexcept { return merges_; }
  std::size_t size() const noexcept { return merges_.size(); }

  /// Symbols of `word` after replaying the merges in learned order.
  std::vector<std::string> symbols(std::string_view word) const;
  /// Surface pieces, every non-final piece carrying "@@".
  std::vector<std::string> segment(std::string_view word) const;
  std::string apply_line(std::string_view line) const;
  /// Applies to many lines, segmenting each distinct word once.
  std::vector<std::string> apply_lines(const std::vector<std::string>& lines) const;

  /// One "left right" pair per line.
  std::string to_text() const;
  static BpeModel from_text(std::string_view text);

 private:
  std::vector<Merge> merges_;
  std::unordered_map<std::string, std::size_t> rank_;
};

/// Joins "@@ " continuations back into words.
std::string undo_bpe(std::string_view line);

/// BPE granularity: a merge count, or word level (no segmentation).
struct MergeSetting {
  std::optional<std::size_t> merges;

  bool word_level() const noexcept { return !merges.has_value(); }
  std::string str() const;
  static MergeSetting parse(std::string_view text);
  static MergeSetting word() { return {}; }
  static MergeSetting count(std::size_t n) { return MergeSetting{n}; }
  bool operator==(const MergeSetting&) const = default;
};

}  // namespace cgnmt::subword
