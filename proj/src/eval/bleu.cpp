// SPDX-License-Identifier: Apache-2.0
#include "eval/bleu.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "subword/text.hpp"
#include "tensor/errors.hpp"

namespace cgnmt::eval {

namespace {

using Ngrams = std::map<std::vector<std::string>, std::size_t>;

std::vector<std::string> tokens(const std::string& line, bool lowercase) {
  auto toks = subword::split_ws(line);
  if (lowercase)
    for (auto& t : toks)
      for (auto& c : t)
        if (c >= 'A' && c <= 'Z') c = char(c - 'A' + 'a');
  return toks;
}

Ngrams count(const std::vector<std::string>& toks, std::size_t n) {
  Ngrams out;
  for (std::size_t i = 0; i + n <= toks.size(); ++i) ++out[std::vector<std::string>(toks.begin() + long(i), toks.begin() + long(i + n))];
  return out;
}

}  // namespace

BleuStats bleu_stats(const std::vector<std::string>& hypotheses, const std::vector<std::string>& references, bool lowercase) {
  if (hypotheses.size() != references.size())
    fail(ErrorCode::Dimension, "bleu: " + std::to_string(hypotheses.size()) + " hypotheses for " + std::to_string(references.size()) +
                                   " references");
  BleuStats s;
  for (std::size_t line = 0; line < hypotheses.size(); ++line) {
    const auto hyp = tokens(hypotheses[line], lowercase);
    const auto ref = tokens(references[line], lowercase);
    s.hyp_length += hyp.size();
    s.ref_length += ref.size();
    for (std::size_t n = 1; n <= 4; ++n) {
      const auto h = count(hyp, n);
      const auto r = count(ref, n);
      for (const auto& [gram, c] : h) {
        const auto it = r.find(gram);
        if (it != r.end()) s.matches[n - 1] += std::min(c, it->second);
      }
      s.totals[n - 1] += hyp.size() >= n ? hyp.size() - n + 1 : 0;
    }
  }
  return s;
}

double bleu_from_stats(const BleuStats& s) {
  if (s.ref_length == 0) fail(ErrorCode::InvalidArgument, "bleu: references are empty");
  double log_p = 0;
  for (std::size_t n = 0; n < 4; ++n) {
    if (s.matches[n] == 0 || s.totals[n] == 0) return 0.0;
    log_p += std::log(double(s.matches[n]) / double(s.totals[n]));
  }
  const double c = double(s.hyp_length), r = double(s.ref_length);
  const double log_bp = std::min(0.0, 1.0 - r / c);
  return 100.0 * std::exp(log_bp + log_p / 4.0);
}

double bleu(const std::vector<std::string>& hypotheses, const std::vector<std::string>& references, bool lowercase) {
  return bleu_from_stats(bleu_stats(hypotheses, references, lowercase));
}

}  // namespace cgnmt::eval
