// SPDX-License-Identifier: Apache-2.0
#include "subword/spelling.hpp"

#include <algorithm>
#include <set>

#include "subword/bpe.hpp"
#include "subword/text.hpp"
#include "tensor/errors.hpp"

namespace cgnmt::subword {

std::string surface(std::string_view type, bool* continued) {
  const bool cont = type.size() > kContinuation.size() && type.substr(type.size() - kContinuation.size()) == kContinuation;
  if (continued) *continued = cont;
  return std::string(cont ? type.substr(0, type.size() - kContinuation.size()) : type);
}

CharVocab CharVocab::build(const Vocabulary& vocab) {
  std::set<std::string> seen;
  for (std::size_t i = kNumReserved; i < vocab.size(); ++i)
    for (auto& c : utf8_chars(surface(vocab.type(int(i))))) seen.insert(std::move(c));
  CharVocab cv;
  cv.chars_.assign(seen.begin(), seen.end());
  for (std::size_t i = 0; i < cv.chars_.size(); ++i) cv.index_.emplace(cv.chars_[i], int(kNumCharReserved + i));
  return cv;
}

int CharVocab::id(std::string_view ch) const {
  auto it = index_.find(std::string(ch));
  return it == index_.end() ? kCharUnk : it->second;
}

const std::string& CharVocab::symbol(int id) const {
  static const std::string names[kNumCharReserved] = {"<padc>", "<unkc>", "<w>", "</w>", "<cont>"};
  if (id < 0 || std::size_t(id) >= size()) fail(ErrorCode::Index, "character id " + std::to_string(id) + " out of range");
  return id < kNumCharReserved ? names[id] : chars_[std::size_t(id - kNumCharReserved)];
}

SpellingTable spellings(const Vocabulary& vocab, const CharVocab& chars) {
  SpellingTable table;
  table.rows.reserve(vocab.size());
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    std::vector<int> row{kCharBegin};
    const bool reserved = Vocabulary::is_reserved(int(i));
    if (!reserved) {
      bool cont = false;
      for (const auto& c : utf8_chars(surface(vocab.type(int(i)), &cont))) row.push_back(chars.id(c));
      if (cont) row.push_back(kCharCont);
    }
    row.push_back(kCharEnd);
    if (row.size() < kMinSpelling) row.resize(kMinSpelling, kCharPad);
    table.max_length = std::max(table.max_length, row.size());
    table.rows.push_back(std::move(row));
    table.compositional.push_back(reserved ? 0 : 1);
  }
  return table;
}

std::string decode_spelling(const std::vector<int>& row, const CharVocab& chars) {
  std::string out;
  for (int c : row) {
    if (c == kCharBegin || c == kCharEnd || c == kCharPad) continue;
    if (c == kCharCont) out += kContinuation;
    else if (c == kCharUnk) out += "\xEF\xBF\xBD";
    else out += chars.symbol(c);
  }
  return out;
}

}  // namespace cgnmt::subword
