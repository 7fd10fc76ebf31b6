// SPDX-License-Identifier: Apache-2.0
#include "nmt/translator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nmt/softmax.hpp"
#include "subword/vocab.hpp"
#include "tensor/errors.hpp"

namespace cgnmt::nmt {

using subword::kBos;
using subword::kEos;
using subword::kPad;

namespace {

template <typename Real>
Var<Real> repeat_rows(const Var<Real>& states, const std::vector<int>& parents) {
  const auto shape = states.shape();
  const std::size_t per = states.value().size() / shape[0];
  auto flat = reshape(states, Shape{shape[0], per});
  Shape out = shape;
  out[0] = parents.size();
  return reshape(gather_rows(flat, parents), out);
}

template <typename Real>
EncoderOutput<Real> select_batch(const EncoderOutput<Real>& enc, const std::vector<int>& parents) {
  EncoderOutput<Real> out;
  out.states = repeat_rows(enc.states, parents);
  for (int p : parents) out.lengths.push_back(enc.lengths[std::size_t(p)]);
  return out;
}

template <typename Real>
DecoderState<Real> select_state(const DecoderState<Real>& st, const std::vector<int>& parents) {
  DecoderState<Real> out;
  for (const auto& l : st.layers) out.layers.push_back({gather_rows(l.h, parents), gather_rows(l.c, parents)});
  out.feed = gather_rows(st.feed, parents);
  return out;
}

// Log-probabilities with PAD and BOS excluded from generation.
template <typename Real>
Tensor<double> step_log_probs(const Tensor<Real>& states, const Tensor<Real>& w_o, std::size_t splits) {
  const auto lp = log_softmax(split_forward_logits(states, w_o, splits));
  auto out = lp.template cast<double>();
  for (std::size_t r = 0; r < out.rows(); ++r) {
    out[r * out.cols() + kPad] = -std::numeric_limits<double>::infinity();
    out[r * out.cols() + kBos] = -std::numeric_limits<double>::infinity();
  }
  return out;
}

}  // namespace

template <typename Real>
Translator<Real>::Translator(const Model<Real>& model) : model_(model) {
  Tape<Real> tape(false);
  auto rows = model_.target_rows(tape, nullptr);
  w_s_ = rows.input.value();
  w_o_ = rows.softmax.value();
}

template <typename Real>
Hypothesis Translator<Real>::beam_search(const std::vector<int>& src, const BeamOptions& options) const {
  if (options.max_len < 1) fail(ErrorCode::Config, "beam search: max_len must be at least 1");
  if (options.beam < 1) fail(ErrorCode::Config, "beam search: beam must be at least 1");
  Tape<Real> tape(false);
  const auto enc1 = model_.encode(tape, {src});
  auto ws = tape.constant_ref(w_s_);
  auto state = model_.initial_state(tape, enc1);
  auto enc = enc1;

  struct Live {
    std::vector<int> tokens;
    double score;
  };
  std::vector<Live> live{{{}, 0.0}};
  std::vector<Hypothesis> finished;
  const std::size_t V = w_o_.rows();
  auto rank = [&](const Hypothesis& h) {
    return options.normalize_length ? h.score / double(h.tokens.size() + (h.finished ? 1 : 0)) : h.score;
  };

  for (std::size_t step = 0; step < options.max_len && !live.empty(); ++step) {
    std::vector<int> prev;
    for (const auto& h : live) prev.push_back(h.tokens.empty() ? kBos : h.tokens.back());
    state = model_.decode_step(tape, state, gather_rows(ws, prev), enc);
    const auto lp = step_log_probs(state.feed.value(), w_o_, options.splits);

    struct Cand {
      double score;
      int parent;
      int token;
    };
    std::vector<Cand> cands;
    cands.reserve(live.size() * V);
    for (std::size_t h = 0; h < live.size(); ++h)
      for (std::size_t v = 0; v < V; ++v) {
        const double l = lp[h * V + v];
        if (std::isfinite(l)) cands.push_back({live[h].score + l, int(h), int(v)});
      }
    // EOS candidates ranked inside the top `beam` finish; live slots are refilled
    // from the best non-EOS candidates.
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.parent != b.parent ? a.parent < b.parent : a.token < b.token;
    });
    std::vector<Live> next;
    std::vector<int> parents;
    for (std::size_t k = 0; k < cands.size() && next.size() < options.beam; ++k) {
      const auto& c = cands[k];
      auto tokens = live[std::size_t(c.parent)].tokens;
      if (c.token == kEos) {
        if (k < options.beam) finished.push_back({std::move(tokens), c.score, true});
      } else {
        tokens.push_back(c.token);
        next.push_back({std::move(tokens), c.score});
        parents.push_back(c.parent);
      }
    }
    live = std::move(next);
    if (live.empty()) break;
    state = select_state(state, parents);
    enc = select_batch(enc1, std::vector<int>(parents.size(), 0));

    if (!options.normalize_length && !finished.empty()) {
      double best_finished = -std::numeric_limits<double>::infinity();
      for (const auto& f : finished) best_finished = std::max(best_finished, f.score);
      double best_live = -std::numeric_limits<double>::infinity();
      for (const auto& h : live) best_live = std::max(best_live, h.score);
      if (best_finished >= best_live) break;
    }
  }

  std::vector<Hypothesis> pool = finished;
  if (pool.empty())
    for (auto& h : live) pool.push_back({h.tokens, h.score, false});
  if (pool.empty()) return {};
  return *std::max_element(pool.begin(), pool.end(), [&](const Hypothesis& a, const Hypothesis& b) { return rank(a) < rank(b); });
}

template <typename Real>
std::vector<std::vector<double>> Translator<Real>::prefix_log_probs(const std::vector<int>& src, const std::vector<int>& prefix) const {
  Tape<Real> tape(false);
  const auto enc = model_.encode(tape, {src});
  auto ws = tape.constant_ref(w_s_);
  auto state = model_.initial_state(tape, enc);
  std::vector<std::vector<double>> rows;
  for (std::size_t j = 0; j <= prefix.size(); ++j) {
    const int prev = j == 0 ? kBos : prefix[j - 1];
    state = model_.decode_step(tape, state, gather_rows(ws, {prev}), enc);
    const auto lp = step_log_probs(state.feed.value(), w_o_, 1);
    rows.emplace_back(lp.data(), lp.data() + lp.size());
  }
  return rows;
}

template <typename Real>
double Translator<Real>::score(const std::vector<int>& src, const std::vector<int>& tgt) const {
  const auto rows = prefix_log_probs(src, tgt);
  double total = 0;
  for (std::size_t j = 0; j <= tgt.size(); ++j) {
    const int y = j < tgt.size() ? tgt[j] : kEos;
    if (y < 0 || std::size_t(y) >= rows[j].size()) fail(ErrorCode::Index, "score: token id out of range");
    total += rows[j][std::size_t(y)];
  }
  return total;
}

template class Translator<float>;
template class Translator<double>;

}  // namespace cgnmt::nmt
