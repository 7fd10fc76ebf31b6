// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <string>
#include <vector>

namespace cgnmt::eval {

struct BleuStats {
  std::array<std::size_t, 4> matches{};
  std::array<std::size_t, 4> totals{};
  std::size_t hyp_length = 0;
  std::size_t ref_length = 0;
};

/// Corpus-level n-gram statistics over whitespace tokens, one reference per line.
/// Mismatched line counts raise a Dimension error.
BleuStats bleu_stats(const std::vector<std::string>& hypotheses, const std::vector<std::string>& references, bool lowercase = true);

/// BLEU-4 in [0, 100], unsmoothed: zero as soon as one precision is zero.
double bleu_from_stats(const BleuStats& stats);
double bleu(const std::vector<std::string>& hypotheses, const std::vector<std::string>& references, bool lowercase = true);

}  // namespace cgnmt::eval
