// SPDX-License-Identifier: Apache-2.0
#include "subword/vocab.hpp"

#include <algorithm>
#include <charconv>

#include "subword/text.hpp"
#include "tensor/errors.hpp"

namespace cgnmt::subword {

const std::vector<std::string>& reserved_tokens() {
  static const std::vector<std::string> tokens{"<pad>", "<unk>", "<s>", "</s>"};
  return tokens;
}

Vocabulary::Vocabulary() {
  for (const auto& t : reserved_tokens()) push(t, 0);
}

void Vocabulary::push(const std::string& type, std::uint64_t freq) {
  index_.emplace(type, int(types_.size()));
  types_.push_back(type);
  freqs_.push_back(freq);
}

Vocabulary Vocabulary::build(const std::vector<std::vector<std::string>>& sentences, std::size_t max_size) {
  std::unordered_map<std::string, std::uint64_t> counts;
  std::size_t tokens = 0;
  for (const auto& s : sentences)
    for (const auto& t : s) {
      ++counts[t];
      ++tokens;
    }
  if (tokens == 0) fail(ErrorCode::InvalidArgument, "build_vocab: empty corpus");
  return from_counts(counts, max_size);
}

Vocabulary Vocabulary::from_counts(const std::unordered_map<std::string, std::uint64_t>& counts, std::size_t max_size) {
  std::vector<std::pair<std::string, std::uint64_t>> entries;
  const auto& reserved = reserved_tokens();
  for (const auto& [type, n] : counts)
    if (n > 0 && std::find(reserved.begin(), reserved.end(), type) == reserved.end()) entries.emplace_back(type, n);
  if (entries.empty()) fail(ErrorCode::InvalidArgument, "build_vocab: empty corpus");
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  if (entries.size() > max_size) entries.resize(max_size);
  Vocabulary v;
  for (const auto& [type, n] : entries) v.push(type, n);
  return v;
}

Vocabulary Vocabulary::extended(const std::vector<std::string>& types) const {
  std::vector<std::string> missing;
  for (const auto& t : types)
    if (!contains(t)) missing.push_back(t);
  std::sort(missing.begin(), missing.end());
  missing.erase(std::unique(missing.begin(), missing.end()), missing.end());
  Vocabulary v = *this;
  for (const auto& t : missing) v.push(t, 0);
  return v;
}

int Vocabulary::id(std::string_view type) const {
  auto it = index_.find(std::string(type));
  return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view type) const { return index_.count(std::string(type)) != 0; }

const std::string& Vocabulary::type(int id) const {
  if (id < 0 || std::size_t(id) >= types_.size())
    fail(ErrorCode::Index, "vocabulary id " + std::to_string(id) + " outside [0, " + std::to_string(types_.size()) + ")");
  return types_[std::size_t(id)];
}

std::uint64_t Vocabulary::frequency(int id) const {
  type(id);
  return freqs_[std::size_t(id)];
}

std::vector<int> Vocabulary::encode(const std::vector<std::string>& tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

std::vector<std::string> Vocabulary::decode(const std::vector<int>& ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (int i : ids) out.push_back(type(i));
  return out;
}

std::string Vocabulary::to_text() const {
  std::string out;
  for (std::size_t i = kNumReserved; i < types_.size(); ++i) {
    out += types_[i];
    out += '\t';
    out += std::to_string(freqs_[i]);
    out += '\n';
  }
  return out;
}

Vocabulary Vocabulary::from_text(std::string_view text) {
  Vocabulary v;
  std::size_t line_no = 0, pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    const auto tab = line.rfind('\t');
    std::uint64_t freq = 0;
    if (tab == std::string_view::npos || tab == 0 ||
        std::from_chars(line.data() + tab + 1, line.data() + line.size(), freq).ec != std::errc())
      fail(ErrorCode::Format, "vocabulary line " + std::to_string(line_no) + ": expected type<TAB>frequency");
    std::string type(line.substr(0, tab));
    if (v.contains(type)) fail(ErrorCode::Format, "vocabulary line " + std::to_string(line_no) + ": duplicate type " + type);
    v.push(type, freq);
  }
  return v;
}

}  // namespace cgnmt::subword
