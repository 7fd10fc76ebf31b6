// SPDX-License-Identifier: Apache-2.0
#include "training/corpus.hpp"

#include <algorithm>
#include <numeric>

#include "subword/text.hpp"
#include "tensor/errors.hpp"
#include "tensor/random.hpp"

namespace cgnmt::training {

SentencePairs filter_corpus(const std::vector<std::string>& src, const std::vector<std::string>& tgt,
                            std::size_t max_source_len, FilterStats* stats) {
  if (src.size() != tgt.size()) {
    const std::size_t first = std::min(src.size(), tgt.size()) + 1;
    fail(ErrorCode::Format, "misaligned corpus: source has " + std::to_string(src.size()) + " lines, target has " +
                                std::to_string(tgt.size()) + " lines; line " + std::to_string(first) + " has no partner");
  }
  SentencePairs out;
  FilterStats s;
  for (std::size_t i = 0; i < src.size(); ++i) {
    const auto stoks = subword::split_ws(src[i]);
    if (stoks.empty() || subword::split_ws(tgt[i]).empty()) {
      ++s.dropped_empty;
      continue;
    }
    if (stoks.size() > max_source_len) {
      ++s.dropped_long;
      continue;
    }
    out.src.push_back(src[i]);
    out.tgt.push_back(tgt[i]);
  }
  s.kept = out.size();
  if (stats) *stats = s;
  return out;
}

namespace {

std::vector<nmt::Batch> cut(const Corpus& corpus, const std::vector<std::size_t>& order, std::size_t batch_size) {
  if (batch_size < 1) fail(ErrorCode::Config, "batch_size must be at least 1");
  if (corpus.src.size() != corpus.tgt.size()) fail(ErrorCode::Dimension, "corpus sides differ in length");
  std::vector<nmt::Batch> batches;
  for (std::size_t begin = 0; begin < order.size(); begin += batch_size) {
    nmt::Batch b;
    for (std::size_t k = begin; k < std::min(order.size(), begin + batch_size); ++k) {
      b.src.push_back(corpus.src[order[k]]);
      b.tgt.push_back(corpus.tgt[order[k]]);
    }
    batches.push_back(std::move(b));
  }
  return batches;
}

}  // namespace

std::vector<nmt::Batch> make_batches(const Corpus& corpus, std::size_t batch_size, std::uint64_t seed, std::size_t epoch) {
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, "batches", epoch));
  std::shuffle(order.begin(), order.end(), rng);
  return cut(corpus, order, batch_size);
}

std::vector<nmt::Batch> ordered_batches(const Corpus& corpus, std::size_t batch_size) {
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  return cut(corpus, order, batch_size);
}

}  // namespace cgnmt::training
