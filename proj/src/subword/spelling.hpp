// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "subword/vocab.hpp"

namespace cgnmt::subword {

inline constexpr int kCharPad = 0;
inline constexpr int kCharUnk = 1;
inline constexpr int kCharBegin = 2;
inline constexpr int kCharEnd = 3;
inline constexpr int kCharCont = 4;
inline constexpr int kNumCharReserved = 5;
inline constexpr std::size_t kMinSpelling = 6;

/// Surface form of a vocabulary type, without a trailing "@@".
std::string surface(std::string_view type, bool* continued = nullptr);

/// Character inventory: reserved ids then code points in byte order.
class CharVocab {
 public:
  CharVocab() = default;
  static CharVocab build(const Vocabulary& vocab);

  int id(std::string_view ch) const;
  const std::string& symbol(int id) const;
  std::size_t size() const noexcept { return kNumCharReserved + chars_.size(); }

 private:
  std::vector<std::string> chars_;
  std::unordered_map<std::string, int> index_;
};

struct SpellingTable {
  std::vector<std::vector<int>> rows;   // one per vocabulary id
  std::vector<std::uint8_t> compositional;
  std::size_t max_length = 0;
};

/// ⟨s⟩ chars [CONT] ⟨/s⟩ padded to at least 6; reserved types get ⟨s⟩⟨/s⟩.
SpellingTable spellings(const Vocabulary& vocab, const CharVocab& chars);

/// Inverse of a spelling row (unknown characters render as U+FFFD).
std::string decode_spelling(const std::vector<int>& row, const CharVocab& chars);

}  // namespace cgnmt::subword
