// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace cgnmt::subword {

inline constexpr int kPad = 0;
inline constexpr int kUnk = 1;
inline constexpr int kBos = 2;
inline constexpr int kEos = 3;
inline constexpr int kNumReserved = 4;

/// Token vocabulary. Ids 0..3 are PAD, UNK, BOS, EOS; the remaining ids follow
/// descending frequency with lexicographic tie-break.
class Vocabulary {
 public:
  Vocabulary();

  /// Keeps the `max_size` most frequent non-reserved types of the token stream.
  static Vocabulary build(const std::vector<std::vector<std::string>>& sentences, std::size_t max_size);
  static Vocabulary from_counts(const std::unordered_map<std::string, std::uint64_t>& counts, std::size_t max_size);

  /// Copy with every absent type of `types` appended at frequency 0.
  Vocabulary extended(const std::vector<std::string>& types) const;

  int id(std::string_view type) const;
  bool contains(std::string_view type) const;
  const std::string& type(int id) const;
  std::uint64_t frequency(int id) const;
  std::size_t size() const noexcept { return types_.size(); }
  static bool is_reserved(int id) noexcept { return id >= 0 && id < kNumReserved; }

  std::vector<int> encode(const std::vector<std::string>& tokens) const;
  std::vector<std::string> decode(const std::vector<int>& ids) const;

  /// "type<TAB>frequency" lines for the non-reserved types, in id order.
  std::string to_text() const;
  static Vocabulary from_text(std::string_view text);

 private:
  void push(const std::string& type, std::uint64_t freq);

  std::vector<std::string> types_;
  std::vector<std::uint64_t> freqs_;
  std::unordered_map<std::string, int> index_;
};

const std::vector<std::string>& reserved_tokens();

}  // namespace cgnmt::subword
