// SPDX-License-Identifier: Apache-2.0
// Synthetic agglutinative translation task: each source unit "<lemma> <tag>"
// becomes one target word built from a lemma stem and a tag suffix.
#pragma once

#include <algorithm>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace cgnmt::testing {

struct MorphTask {
  std::vector<std::string> train_src, train_tgt, dev_src, dev_tgt, test_src, test_tgt;
  std::vector<std::string> lexicon;  // every target form
  double unseen_fraction = 0;        // distinct test combinations absent from training
};

struct MorphTaskOptions {
  std::size_t lemmas = 60;
  std::size_t train_pairs = 2000;
  std::size_t dev_pairs = 200;
  std::size_t test_pairs = 200;
  std::size_t min_units = 3;
  std::size_t max_units = 6;
  double target_unseen = 0.30;
  std::uint64_t seed = 1;
};

inline const std::vector<std::string>& morph_suffixes() {
  static const std::vector<std::string> s{"a", "en", "ok", "ist", "um", "ev", "ir", "ash"};
  return s;
}

inline MorphTask make_morph_task(const MorphTaskOptions& o) {
  std::mt19937_64 rng(o.seed);
  const std::vector<std::string> onset{"b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z"};
  const std::vector<std::string> vowel{"a", "e", "i", "o", "u"};
  auto pick = [&](const std::vector<std::string>& v) { return v[rng() % v.size()]; };
  std::set<std::string> used;
  std::vector<std::string> stems, src_lemmas;
  while (stems.size() < o.lemmas) {
    std::string stem = pick(onset) + pick(vowel) + pick(onset) + pick(vowel) + pick(onset);
    std::string lemma = "w" + std::to_string(stems.size());
    if (!used.insert(stem).second) continue;
    stems.push_back(stem);
    src_lemmas.push_back(lemma);
  }
  const auto& suffixes = morph_suffixes();
  const std::size_t tags = suffixes.size();

  // Hold out a share of combinations from training; every lemma and every
  // suffix stays attested.
  std::vector<std::pair<std::size_t, std::size_t>> combos;
  for (std::size_t l = 0; l < o.lemmas; ++l)
    for (std::size_t t = 0; t < tags; ++t) combos.emplace_back(l, t);
  std::shuffle(combos.begin(), combos.end(), rng);
  std::set<std::pair<std::size_t, std::size_t>> held;
  for (const auto& c : combos) {
    if (held.size() * 4 >= combos.size()) break;
    if (c.second == c.first % tags) continue;
    held.insert(c);
  }
  std::vector<std::pair<std::size_t, std::size_t>> seen, unseen(held.begin(), held.end());
  for (const auto& c : combos)
    if (!held.count(c)) seen.push_back(c);

  MorphTask task;
  for (std::size_t l = 0; l < o.lemmas; ++l)
    for (std::size_t t = 0; t < tags; ++t) task.lexicon.push_back(stems[l] + suffixes[t]);

  auto sentence = [&](auto&& draw, std::string& src, std::string& tgt) {
    const std::size_t n = o.min_units + rng() % (o.max_units - o.min_units + 1);
    src.clear();
    tgt.clear();
    for (std::size_t k = 0; k < n; ++k) {
      const auto [l, t] = draw();
      if (k) {
        src += ' ';
        tgt += ' ';
      }
      src += src_lemmas[l] + " T" + std::to_string(t);
      tgt += stems[l] + suffixes[t];
    }
  };
  std::string s, t;
  for (std::size_t i = 0; i < o.train_pairs; ++i) {
    sentence([&] { return seen[rng() % seen.size()]; }, s, t);
    task.train_src.push_back(s);
    task.train_tgt.push_back(t);
  }
  auto held_out_set = [&](std::size_t pairs, std::vector<std::string>& out_src, std::vector<std::string>& out_tgt) {
    std::set<std::pair<std::size_t, std::size_t>> got_seen, got_unseen;
    std::bernoulli_distribution novel(o.target_unseen);
    for (std::size_t i = 0; i < pairs; ++i) {
      sentence(
          [&] {
            // Keep the distinct-combination ratio near the target.
            const double total = double(got_seen.size() + got_unseen.size());
            const bool want_unseen = total == 0 ? novel(rng) : double(got_unseen.size()) / total < o.target_unseen;
            const auto c = want_unseen ? unseen[rng() % unseen.size()] : seen[rng() % seen.size()];
            (want_unseen ? got_unseen : got_seen).insert(c);
            return c;
          },
          s, t);
      out_src.push_back(s);
      out_tgt.push_back(t);
    }
    return double(got_unseen.size()) / double(got_seen.size() + got_unseen.size());
  };
  held_out_set(o.dev_pairs, task.dev_src, task.dev_tgt);
  task.unseen_fraction = held_out_set(o.test_pairs, task.test_src, task.test_tgt);
  return task;
}

}  // namespace cgnmt::testing
