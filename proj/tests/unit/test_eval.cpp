// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "eval/bleu.hpp"
#include "tensor/errors.hpp"

using namespace cgnmt;
using cgnmt::eval::bleu;

TEST_CASE("identical corpora score 100") {
  CHECK(bleu({"the cat sat on the mat", "a b c d e f"}, {"the cat sat on the mat", "a b c d e f"}) == doctest::Approx(100.0).epsilon(1e-12));
}

TEST_CASE("brevity penalty on a short hypothesis") {
  const double expect = 100.0 * std::exp(1.0 - 5.0 / 4.0);
  CHECK(std::abs(bleu({"a b c d"}, {"a b c d e"}) - expect) < 1e-9);
  CHECK(std::abs(bleu({"a b c d"}, {"a b c d e"}) - 77.880) < 1e-3);
}

TEST_CASE("no four-gram overlap scores zero") {
  CHECK(bleu({"a b c d"}, {"d c b a"}) == 0.0);
  CHECK(bleu({"a b c"}, {"a b c"}) == 0.0);
}

TEST_CASE("modified precision clips repeated n-grams") {
  const auto s = eval::bleu_stats({"the the the the the the the"}, {"the cat is on the mat"});
  CHECK(s.matches[0] == 2);
  CHECK(s.totals[0] == 7);
  CHECK(s.hyp_length == 7);
  CHECK(s.ref_length == 6);
}

TEST_CASE("lowercasing flag") {
  CHECK(bleu({"The Cat Sat On"}, {"the cat sat on"}, true) == doctest::Approx(100.0));
  CHECK(bleu({"The Cat Sat On"}, {"the cat sat on"}, false) == 0.0);
}

TEST_CASE("line-count mismatch and empty references are errors") {
  CHECK_THROWS_AS(bleu({"a"}, {"a", "b"}), Error);
  CHECK_THROWS_AS(bleu({""}, {""}), Error);
}

TEST_CASE("corpus statistics are invariant to shuffling line pairs") {
  std::mt19937 rng(4);
  std::vector<std::string> hyp, ref;
  for (int i = 0; i < 60; ++i) {
    std::string h, r;
    for (int k = 0; k < 4 + int(rng() % 8); ++k) h += "w" + std::to_string(rng() % 6) + " ";
    for (int k = 0; k < 4 + int(rng() % 8); ++k) r += "w" + std::to_string(rng() % 6) + " ";
    hyp.push_back(h);
    ref.push_back(r);
  }
  const double base = bleu(hyp, ref);
  CHECK(base > 0);
  std::vector<std::size_t> order(hyp.size());
  std::iota(order.begin(), order.end(), 0);
  for (int trial = 0; trial < 5; ++trial) {
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::string> h2, r2;
    for (auto i : order) {
      h2.push_back(hyp[i]);
      r2.push_back(ref[i]);
    }
    CHECK(bleu(h2, r2) == base);
  }
}
