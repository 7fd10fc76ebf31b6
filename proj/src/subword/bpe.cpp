// SPDX-License-Identifier: Apache-2.0
#include "subword/bpe.hpp"

#include <cctype>
#include <charconv>
#include <set>

#include "subword/text.hpp"
#include "tensor/errors.hpp"

namespace cgnmt::subword {

namespace {

std::string pair_key(const std::string& a, const std::string& b) {
  std::string k;
  k.reserve(a.size() + b.size() + 1);
  k += a;
  k += '\0';
  k += b;
  return k;
}

std::string strip_end_marker(std::string piece) {
  if (piece.size() >= kEndOfWord.size() && piece.compare(piece.size() - kEndOfWord.size(), kEndOfWord.size(), kEndOfWord) == 0)
    piece.resize(piece.size() - kEndOfWord.size());
  return piece;
}

// Pair counts with an ordered view of (-count, pair) for max extraction.
class PairCounts {
 public:
  void adjust(const Merge& p, std::int64_t delta) {
    if (delta == 0) return;
    auto it = counts_.find(p);
    std::int64_t old = it == counts_.end() ? 0 : it->second;
    if (old > 0) order_.erase({-old, p});
    const std::int64_t now = old + delta;
    if (now > 0) {
      counts_[p] = now;
      order_.insert({-now, p});
    } else if (it != counts_.end()) {
      counts_.erase(it);
    }
  }
  bool empty() const { return order_.empty(); }
  const std::pair<std::int64_t, Merge>& best() const { return *order_.begin(); }

 private:
  std::map<Merge, std::int64_t> counts_;
  std::set<std::pair<std::int64_t, Merge>> order_;
};

template <typename Fn>
std::string map_words(std::string_view line, Fn&& fn) {
  std::string out;
  out.reserve(line.size() * 2);
  std::size_t i = 0;
  while (i < line.size()) {
    if (std::isspace((unsigned char)line[i])) {
      out += line[i++];
      continue;
    }
    const std::size_t start = i;
    while (i < line.size() && !std::isspace((unsigned char)line[i])) ++i;
    out += fn(line.substr(start, i - start));
  }
  return out;
}

}  // namespace

WordCounts count_words(const std::vector<std::string>& lines) {
  WordCounts counts;
  for (const auto& line : lines)
    for (auto& w : split_ws(line)) ++counts[w];
  return counts;
}

std::vector<std::string> initial_symbols(std::string_view word) {
  auto chars = utf8_chars(word);
  if (!chars.empty()) chars.back() += kEndOfWord;
  return chars;
}

bool merge_symbols(std::vector<std::string>& symbols, const Merge& pair) {
  bool changed = false;
  std::vector<std::string> out;
  out.reserve(symbols.size());
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    if (i + 1 < symbols.size() && symbols[i] == pair.first && symbols[i + 1] == pair.second) {
      out.push_back(symbols[i] + symbols[i + 1]);
      ++i;
      changed = true;
    } else {
      out.push_back(std::move(symbols[i]));
    }
  }
  symbols = std::move(out);
  return changed;
}

BpeModel::BpeModel(std::vector<Merge> merges) : merges_(std::move(merges)) {
  for (std::size_t r = 0; r < merges_.size(); ++r) rank_.emplace(pair_key(merges_[r].first, merges_[r].second), r);
}

BpeModel BpeModel::learn(const WordCounts& words, std::size_t num_merges, SymbolState* final_state) {
  std::vector<std::vector<std::string>> syms;
  std::vector<std::int64_t> freq;
  std::vector<const std::string*> names;
  for (const auto& [w, n] : words) {
    if (w.empty() || n == 0) continue;
    syms.push_back(initial_symbols(w));
    freq.push_back(std::int64_t(n));
    names.push_back(&w);
  }

  PairCounts counts;
  std::map<Merge, std::set<std::size_t>> where;
  auto account = [&](std::size_t wi, std::int64_t sign) {
    const auto& s = syms[wi];
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
      Merge p{s[i], s[i + 1]};
      counts.adjust(p, sign * freq[wi]);
      if (sign > 0) where[p].insert(wi);
    }
  };
  for (std::size_t wi = 0; wi < syms.size(); ++wi) account(wi, +1);

  std::vector<Merge> merges;
  while (merges.size() < num_merges && !counts.empty()) {
    const auto [neg, best] = counts.best();
    if (-neg < 2) break;
    merges.push_back(best);
    const auto affected = where[best];
    where.erase(best);
    for (std::size_t wi : affected) {
      auto trial = syms[wi];
      if (!merge_symbols(trial, best)) continue;
      account(wi, -1);
      syms[wi] = std::move(trial);
      account(wi, +1);
    }
  }

  if (final_state) {
    final_state->clear();
    for (std::size_t wi = 0; wi < syms.size(); ++wi) (*final_state)[*names[wi]] = syms[wi];
  }
  return BpeModel(std::move(merges));
}

std::vector<std::string> BpeModel::symbols(std::string_view word) const {
  auto s = initial_symbols(word);
  // Replaying merges in learned order is equivalent to repeatedly applying the
  // lowest-ranked present pair whose rank exceeds the last one applied.
  std::size_t floor = 0;
  while (s.size() > 1) {
    std::size_t best = merges_.size();
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
      auto it = rank_.find(pair_key(s[i], s[i + 1]));
      if (it != rank_.end() && it->second >= floor && it->second < best) best = it->second;
    }
    if (best == merges_.size()) break;
    merge_symbols(s, merges_[best]);
    floor = best + 1;
  }
  return s;
}

std::vector<std::string> BpeModel::segment(std::string_view word) const {
  auto s = symbols(word);
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = i + 1 < s.size() ? s[i] + kContinuation : strip_end_marker(std::move(s[i]));
  return s;
}

std::string BpeModel::apply_line(std::string_view line) const {
  return map_words(line, [&](std::string_view w) { return join(segment(w)); });
}

std::vector<std::string> BpeModel::apply_lines(const std::vector<std::string>& lines) const {
  std::unordered_map<std::string, std::string> cache;
  std::vector<std::string> out;
  out.reserve(lines.size());
  for (const auto& line : lines)
    out.push_back(map_words(line, [&](std::string_view w) {
      auto it = cache.find(std::string(w));
      if (it == cache.end()) it = cache.emplace(std::string(w), join(segment(w))).first;
      return it->second;
    }));
  return out;
}

std::string BpeModel::to_text() const {
  std::string out;
  for (const auto& [a, b] : merges_) {
    out += a;
    out += ' ';
    out += b;
    out += '\n';
  }
  return out;
}

BpeModel BpeModel::from_text(std::string_view text) {
  std::vector<Merge> merges;
  std::size_t pos = 0, line_no = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto fields = split_ws(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (fields.empty()) continue;
    if (fields.size() != 2) fail(ErrorCode::Format, "merge file line " + std::to_string(line_no) + ": expected \"left right\"");
    merges.emplace_back(std::move(fields[0]), std::move(fields[1]));
  }
  return BpeModel(std::move(merges));
}

std::string undo_bpe(std::string_view line) {
  std::string out;
  out.reserve(line.size());
  const std::string marker = kContinuation + " ";
  std::size_t i = 0;
  while (i < line.size()) {
    if (line.compare(i, marker.size(), marker) == 0) {
      i += marker.size();
      continue;
    }
    out += line[i++];
  }
  if (out.size() >= kContinuation.size() && out.compare(out.size() - kContinuation.size(), kContinuation.size(), kContinuation) == 0)
    out.resize(out.size() - kContinuation.size());
  return out;
}

std::string MergeSetting::str() const { return merges ? std::to_string(*merges) : "word"; }

MergeSetting MergeSetting::parse(std::string_view text) {
  if (text == "word") return word();
  std::size_t n = 0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), n);
  if (text.empty() || ec != std::errc() || p != text.data() + text.size())
    fail(ErrorCode::Config, "bpe merges must be a non-negative integer or \"word\", got \"" + std::string(text) + "\"");
  return count(n);
}

}  // namespace cgnmt::subword
