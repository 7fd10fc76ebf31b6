// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nmt/model.hpp"

namespace cgnmt::training {

struct SentencePairs {
  std::vector<std::string> src;
  std::vector<std::string> tgt;
  std::size_t size() const noexcept { return src.size(); }
};

struct FilterStats {
  std::size_t kept = 0;
  std::size_t dropped_long = 0;
  std::size_t dropped_empty = 0;
};

/// Drops pairs with an empty side and pairs whose source has more than
/// `max_source_len` whitespace tokens. Mismatched line counts raise a Format error.
SentencePairs filter_corpus(const std::vector<std::string>& src, const std::vector<std::string>& tgt,
                            std::size_t max_source_len = 50, FilterStats* stats = nullptr);

/// Numericalized parallel corpus.
struct Corpus {
  std::vector<std::vector<int>> src;
  std::vector<std::vector<int>> tgt;
  std::size_t size() const noexcept { return src.size(); }
};

/// Shuffles with a generator derived from (seed, epoch) and cuts consecutive batches.
std::vector<nmt::Batch> make_batches(const Corpus& corpus, std::size_t batch_size, std::uint64_t seed, std::size_t epoch);

/// Batches in corpus order.
std::vector<nmt::Batch> ordered_batches(const Corpus& corpus, std::size_t batch_size);

}  // namespace cgnmt::training
