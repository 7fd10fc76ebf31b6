// SPDX-License-Identifier: Apache-2.0
#include "analysis/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <unordered_map>

#include "subword/text.hpp"
#include "tensor/errors.hpp"

namespace cgnmt::analysis {

namespace {

std::unordered_map<std::string, std::size_t> unigram_counts(const Sentences& corpus, std::size_t& tokens) {
  std::unordered_map<std::string, std::size_t> counts;
  tokens = 0;
  for (const auto& s : corpus)
    for (const auto& t : s) {
      ++counts[t];
      ++tokens;
    }
  if (tokens == 0) fail(ErrorCode::InvalidArgument, "corpus has no tokens");
  return counts;
}

std::size_t parse_index(std::string_view s, std::size_t line) {
  std::size_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || p != s.data() + s.size())
    fail(ErrorCode::Format, "alignment line " + std::to_string(line) + ": bad index \"" + std::string(s) + "\"");
  return v;
}

}  // namespace

double type_token_ratio(const Sentences& corpus) {
  std::size_t tokens = 0;
  const auto counts = unigram_counts(corpus, tokens);
  return double(counts.size()) / double(tokens);
}

double word_entropy(const Sentences& corpus) {
  std::size_t tokens = 0;
  const auto counts = unigram_counts(corpus, tokens);
  std::vector<std::size_t> c;
  for (const auto& [w, n] : counts) c.push_back(n);
  std::sort(c.begin(), c.end());
  double h = 0;
  for (auto n : c) {
    const double p = double(n) / double(tokens);
    h -= p * std::log(p);
  }
  return h;
}

std::size_t AlignmentSet::links() const {
  std::size_t n = 0;
  for (const auto& s : sentences) n += s.size();
  return n;
}

AlignmentSet parse_pharaoh(const std::vector<std::string>& lines) {
  AlignmentSet set;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    SentenceAlignment a;
    for (const auto& tok : subword::split_ws(lines[i])) {
      const auto dash = tok.find('-');
      if (dash == std::string::npos) fail(ErrorCode::Format, "alignment line " + std::to_string(i + 1) + ": expected i-j, got \"" + tok + "\"");
      a.emplace(parse_index(std::string_view(tok).substr(0, dash), i + 1), parse_index(std::string_view(tok).substr(dash + 1), i + 1));
    }
    set.sentences.push_back(std::move(a));
  }
  return set;
}

std::vector<std::string> to_pharaoh(const AlignmentSet& set) {
  std::vector<std::string> out;
  for (const auto& s : set.sentences) {
    std::string line;
    for (const auto& [i, j] : s) {
      if (!line.empty()) line += ' ';
      line += std::to_string(i) + "-" + std::to_string(j);
    }
    out.push_back(std::move(line));
  }
  return out;
}

void check_bounds(const AlignmentSet& set, const Sentences& source, const Sentences& target) {
  if (set.sentences.size() != source.size() || source.size() != target.size())
    fail(ErrorCode::Dimension, "alignment covers " + std::to_string(set.sentences.size()) + " pairs, corpus has " +
                                   std::to_string(source.size()) + " source and " + std::to_string(target.size()) + " target lines");
  for (std::size_t k = 0; k < source.size(); ++k)
    for (const auto& [i, j] : set.sentences[k])
      if (i >= source[k].size() || j >= target[k].size())
        fail(ErrorCode::Index, "alignment line " + std::to_string(k + 1) + ": link " + std::to_string(i) + "-" + std::to_string(j) +
                                   " outside a " + std::to_string(source[k].size()) + "x" + std::to_string(target[k].size()) + " pair");
}

LinkCounts classify_links(const AlignmentSet& set) {
  LinkCounts c;
  for (const auto& s : set.sentences) {
    std::map<std::size_t, std::size_t> src_degree, tgt_degree;
    for (const auto& [i, j] : s) {
      ++src_degree[i];
      ++tgt_degree[j];
    }
    for (const auto& [i, j] : s) {
      c.many_to_one += tgt_degree[j] >= 2;
      c.one_to_many += src_degree[i] >= 2;
      ++c.total;
    }
  }
  return c;
}

double alignment_score(const AlignmentSet& set) {
  const auto c = classify_links(set);
  if (c.total == 0) fail(ErrorCode::InvalidArgument, "alignment_score: no links");
  return (double(c.many_to_one) - double(c.one_to_many)) / double(c.total);
}

AlignmentSet symmetrize_gdfa(const AlignmentSet& forward, const AlignmentSet& backward) {
  if (forward.sentences.size() != backward.sentences.size())
    fail(ErrorCode::Dimension, "symmetrize: " + std::to_string(forward.sentences.size()) + " forward vs " +
                                   std::to_string(backward.sentences.size()) + " backward sentences");
  static const int neighbors[8][2] = {{-1, 0}, {0, -1}, {1, 0}, {0, 1}, {-1, -1}, {-1, 1}, {1, -1}, {1, 1}};
  AlignmentSet out;
  for (std::size_t k = 0; k < forward.sentences.size(); ++k) {
    const auto& f = forward.sentences[k];
    const auto& b = backward.sentences[k];
    SentenceAlignment uni = f, inter;
    uni.insert(b.begin(), b.end());
    std::set_intersection(f.begin(), f.end(), b.begin(), b.end(), std::inserter(inter, inter.end()));
    std::size_t slen = 0, tlen = 0;
    for (const auto& [i, j] : uni) {
      slen = std::max(slen, i + 1);
      tlen = std::max(tlen, j + 1);
    }
    SentenceAlignment a = inter;
    std::vector<bool> src_aligned(slen), tgt_aligned(tlen);
    for (const auto& [i, j] : a) src_aligned[i] = tgt_aligned[j] = true;

    for (bool added = true; added;) {
      added = false;
      for (std::size_t i = 0; i < slen; ++i)
        for (std::size_t j = 0; j < tlen; ++j) {
          if (!a.count({i, j})) continue;
          for (const auto& d : neighbors) {
            const long ni = long(i) + d[0], nj = long(j) + d[1];
            if (ni < 0 || nj < 0 || ni >= long(slen) || nj >= long(tlen)) continue;
            const std::pair<std::size_t, std::size_t> p{std::size_t(ni), std::size_t(nj)};
            if ((!src_aligned[p.first] || !tgt_aligned[p.second]) && uni.count(p) && !a.count(p)) {
              a.insert(p);
              src_aligned[p.first] = tgt_aligned[p.second] = true;
              added = true;
            }
          }
        }
    }
    for (const auto* dir : {&f, &b})
      for (std::size_t i = 0; i < slen; ++i)
        for (std::size_t j = 0; j < tlen; ++j)
          if (!src_aligned[i] && !tgt_aligned[j] && dir->count({i, j})) {
            a.emplace(i, j);
            src_aligned[i] = tgt_aligned[j] = true;
          }
    out.sentences.push_back(std::move(a));
  }
  return out;
}

UniMorphLexicon parse_unimorph(std::string_view text) {
  UniMorphLexicon lex;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string line(text.substr(pos, end - pos));
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (std::size_t tab; (tab = line.find('\t', start)) != std::string::npos; start = tab + 1) fields.push_back(line.substr(start, tab - start));
    fields.push_back(line.substr(start));
    UniMorphEntry e;
    if (fields.size() == 3) {
      e.lemma = fields[0];
      e.form = fields[1];
      std::size_t s = 0;
      for (std::size_t semi; s <= fields[2].size(); s = semi + 1) {
        semi = fields[2].find(';', s);
        if (semi == std::string::npos) semi = fields[2].size();
        if (semi > s) e.tags.push_back(fields[2].substr(s, semi - s));
      }
    }
    if (fields.size() != 3 || e.lemma.empty() || e.form.empty() || e.tags.empty()) {
      ++lex.skipped;
      continue;
    }
    lex.entries.push_back(std::move(e));
  }
  return lex;
}

UniMorphLexicon read_unimorph(const std::string& path) { return parse_unimorph(subword::read_file(path)); }

UniMorphStats unimorph_stats(const UniMorphLexicon& lexicon) {
  if (lexicon.entries.empty()) fail(ErrorCode::InvalidArgument, "unimorph_stats: empty lexicon");
  std::set<std::string> tags;
  std::set<std::set<std::string>> combos;
  for (const auto& e : lexicon.entries) {
    tags.insert(e.tags.begin(), e.tags.end());
    combos.emplace(e.tags.begin(), e.tags.end());
  }
  return {tags.size(), combos.size()};
}

}  // namespace cgnmt::analysis
