// SPDX-License-Identifier: Apache-2.0
#include "nmt/model.hpp"

#include <algorithm>

#include "subword/vocab.hpp"
#include "tensor/errors.hpp"

namespace cgnmt::nmt {

using subword::kBos;
using subword::kEos;
using subword::kPad;

void ModelConfig::validate() const {
  if (embed_dim == 0 || hidden_dim == 0 || encoder_dim == 0 || layers == 0) fail(ErrorCode::Config, "model dimensions must be positive");
  if (embed_dim != hidden_dim)
    fail(ErrorCode::Config, "tied output matrices need embed_dim == hidden_dim (" + std::to_string(embed_dim) + " vs " +
                                std::to_string(hidden_dim) + ")");
  if (encoder_dim % 2 != 0) fail(ErrorCode::Config, "encoder_dim must be even");
  if (composer.embed_dim != embed_dim) fail(ErrorCode::Config, "composer size must equal embed_dim");
  if (init_scale <= 0) fail(ErrorCode::Config, "init_scale must be positive");
}

std::size_t Batch::target_tokens() const {
  std::size_t n = 0;
  for (const auto& t : tgt) n += t.size() + 1;
  return n;
}

template <typename Real>
LstmWeights<Real> Model<Real>::Direction::bind(Tape<Real>& tape) const {
  return {tape.parameter(*wx), tape.parameter(*wh), tape.parameter(*b)};
}

template <typename Real>
typename Model<Real>::Direction Model<Real>::make_lstm(const std::string& prefix, std::size_t in, std::size_t hidden, Rng& rng) {
  const Real s = Real(config_.init_scale);
  Direction d;
  d.wx = &params_.add(prefix + ".wx", random_uniform<Real>({in, 4 * hidden}, rng, -s, s));
  d.wh = &params_.add(prefix + ".wh", random_uniform<Real>({hidden, 4 * hidden}, rng, -s, s));
  d.b = &params_.add(prefix + ".b", Tensor<Real>({4 * hidden}));
  init_lstm_bias(d.b->value, hidden, Real(1));
  return d;
}

template <typename Real>
Model<Real>::Model(const ModelConfig& config, std::size_t source_vocab, subword::SpellingTable target_spellings, std::size_t num_chars,
                   std::uint64_t seed)
    : config_(config), source_vocab_(source_vocab) {
  config_.composer.embed_dim = config_.embed_dim;
  config_.composer.init_scale = config_.init_scale;
  config_.validate();
  if (source_vocab_ <= subword::kNumReserved) fail(ErrorCode::Config, "source vocabulary is empty");
  Rng rng(derive_seed(seed, "model.init"));
  const std::size_t E = config_.embed_dim, D = config_.hidden_dim, H = config_.encoder_dim;
  const Real s = Real(config_.init_scale);

  const auto modes = side_modes();
  const bool composer = modes.input != charemb::EmbedMode::Std || modes.softmax != charemb::EmbedMode::Std;
  embedding_ = std::make_unique<charemb::CharEmbedding<Real>>(config_.composer, std::move(target_spellings), num_chars, params_, rng,
                                                              composer);
  src_emb_ = &params_.add("src_emb", random_uniform<Real>({source_vocab_, E}, rng, -s, s));
  for (std::size_t l = 0; l < config_.layers; ++l) {
    const std::size_t in = l == 0 ? E : H;
    enc_fwd_.push_back(make_lstm("enc.l" + std::to_string(l + 1) + ".fwd", in, H / 2, rng));
    enc_bwd_.push_back(make_lstm("enc.l" + std::to_string(l + 1) + ".bwd", in, H / 2, rng));
  }
  if (H != D) {
    bridge_h_ = &params_.add("bridge.h", random_uniform<Real>({H, D}, rng, -s, s));
    bridge_c_ = &params_.add("bridge.c", random_uniform<Real>({H, D}, rng, -s, s));
  }
  for (std::size_t l = 0; l < config_.layers; ++l) dec_.push_back(make_lstm("dec.l" + std::to_string(l + 1), l == 0 ? E + D : D, D, rng));
  w_a_ = &params_.add("att.wa", random_uniform<Real>({D, H}, rng, -s, s));
  w_c_ = &params_.add("att.wc", random_uniform<Real>({H + D, D}, rng, -s, s));
}

template <typename Real>
std::vector<Var<Real>> Model<Real>::run_direction(Tape<Real>& tape, const Direction& dir, const std::vector<Var<Real>>& xs,
                                                  const std::vector<std::size_t>& lengths, bool reverse,
                                                  LstmState<Real>& final_state) const {
  const std::size_t B = lengths.size(), I = xs.size(), hidden = dir.wh->value.dim(0);
  auto w = dir.bind(tape);
  LstmState<Real> state{tape.constant(Tensor<Real>({B, hidden})), tape.constant(Tensor<Real>({B, hidden}))};
  std::vector<Var<Real>> out(I);
  for (std::size_t step = 0; step < I; ++step) {
    const std::size_t t = reverse ? I - 1 - step : step;
    auto next = lstm_cell(w, xs[t], state);
    std::vector<std::uint8_t> live(B);
    bool all = true;
    for (std::size_t b = 0; b < B; ++b) {
      live[b] = t < lengths[b];
      all = all && live[b];
    }
    if (!all) next = {blend_rows(live, next.h, state.h), blend_rows(live, next.c, state.c)};
    state = next;
    out[t] = state.h;
  }
  final_state = state;
  return out;
}

template <typename Real>
EncoderOutput<Real> Model<Real>::encode(Tape<Real>& tape, const std::vector<std::vector<int>>& src) const {
  if (src.empty()) fail(ErrorCode::InvalidArgument, "encode: empty batch");
  EncoderOutput<Real> enc;
  std::size_t I = 0;
  for (const auto& s : src) {
    if (s.empty()) fail(ErrorCode::InvalidArgument, "encode: empty source sentence");
    enc.lengths.push_back(s.size());
    I = std::max(I, s.size());
  }
  const std::size_t B = src.size();
  auto table = tape.parameter(*src_emb_);
  std::vector<Var<Real>> xs;
  for (std::size_t t = 0; t < I; ++t) {
    std::vector<int> ids(B);
    for (std::size_t b = 0; b < B; ++b) ids[b] = t < src[b].size() ? src[b][t] : kPad;
    xs.push_back(gather_rows(table, ids));
  }
  for (std::size_t l = 0; l < config_.layers; ++l) {
    LstmState<Real> f, r;
    auto fwd = run_direction(tape, enc_fwd_[l], xs, enc.lengths, false, f);
    auto bwd = run_direction(tape, enc_bwd_[l], xs, enc.lengths, true, r);
    for (std::size_t t = 0; t < I; ++t) xs[t] = concat_cols<Real>({fwd[t], bwd[t]});
    enc.finals.push_back({concat_cols<Real>({f.h, r.h}), concat_cols<Real>({f.c, r.c})});
  }
  enc.states = stack_time(xs);
  return enc;
}

template <typename Real>
DecoderState<Real> Model<Real>::initial_state(Tape<Real>& tape, const EncoderOutput<Real>& enc) const {
  DecoderState<Real> st;
  for (const auto& f : enc.finals) {
    if (bridge_h_) st.layers.push_back({matmul(f.h, tape.parameter(*bridge_h_)), matmul(f.c, tape.parameter(*bridge_c_))});
    else st.layers.push_back(f);
  }
  st.feed = tape.constant(Tensor<Real>({enc.lengths.size(), config_.hidden_dim}));
  return st;
}

template <typename Real>
Attention<Real> Model<Real>::attend(Tape<Real>& tape, const Var<Real>& query, const EncoderOutput<Real>& enc) const {
  if (query.value().rank() != 2 || query.value().cols() != config_.hidden_dim)
    fail(ErrorCode::Dimension, "attend: query " + shape_string(query.shape()) + " does not match W_a " + shape_string(w_a_->value.shape()));
  auto q = matmul(query, tape.parameter(*w_a_));
  auto alpha = masked_softmax(batched_dot(enc.states, q), enc.lengths);
  return {weighted_sum(enc.states, alpha), alpha};
}

template <typename Real>
DecoderState<Real> Model<Real>::decode_step(Tape<Real>& tape, const DecoderState<Real>& state, const Var<Real>& input,
                                            const EncoderOutput<Real>& enc) const {
  if (state.layers.size() != config_.layers) fail(ErrorCode::State, "decode_step: state has the wrong layer count");
  DecoderState<Real> next;
  auto x = concat_cols<Real>({input, state.feed});
  for (std::size_t l = 0; l < config_.layers; ++l) {
    next.layers.push_back(lstm_cell(dec_[l].bind(tape), x, state.layers[l]));
    x = next.layers.back().h;
  }
  auto att = attend(tape, x, enc);
  next.feed = vtanh(matmul(concat_cols<Real>({att.context, x}), tape.parameter(*w_c_)));
  next.attention = att.weights;
  return next;
}

template <typename Real>
TargetRows<Real> Model<Real>::target_rows(Tape<Real>& tape, const SampledSupport* support) const {
  TargetRows<Real> rows;
  const std::size_t V = target_vocab_size();
  if (support) {
    rows.ids = support->ids;
  } else {
    rows.ids.resize(V);
    for (std::size_t i = 0; i < V; ++i) rows.ids[i] = int(i);
  }
  rows.row_of.assign(V, -1);
  for (std::size_t r = 0; r < rows.ids.size(); ++r) {
    const int id = rows.ids[r];
    if (id < 0 || std::size_t(id) >= V) fail(ErrorCode::Index, "support id " + std::to_string(id) + " outside target vocabulary");
    rows.row_of[std::size_t(id)] = int(r);
  }
  std::tie(rows.input, rows.softmax) = embedding_->tied_rows(tape, rows.ids, side_modes());
  return rows;
}

template <typename Real>
TeacherForced<Real> Model<Real>::teacher_forced(Tape<Real>& tape, const Batch& batch, const SampledSupport* support,
                                                std::size_t min_steps) const {
  if (batch.src.size() != batch.tgt.size() || batch.src.empty()) fail(ErrorCode::InvalidArgument, "batch: mismatched or empty");
  const std::size_t B = batch.size();
  std::size_t T = min_steps;
  for (const auto& t : batch.tgt) T = std::max(T, t.size() + 1);

  auto rows = target_rows(tape, support);
  auto lookup = [&](int id) {
    if (id < 0 || std::size_t(id) >= rows.row_of.size()) fail(ErrorCode::Index, "target id " + std::to_string(id) + " out of range");
    const int r = rows.row_of[std::size_t(id)];
    if (r < 0) fail(ErrorCode::State, "sampled support is missing batch type " + std::to_string(id));
    return r;
  };

  auto enc = encode(tape, batch.src);
  auto state = initial_state(tape, enc);
  TeacherForced<Real> out;
  std::vector<Var<Real>> outputs;
  const int bos_row = lookup(kBos);
  for (std::size_t j = 0; j < T; ++j) {
    std::vector<int> in(B);
    for (std::size_t b = 0; b < B; ++b) {
      const auto& y = batch.tgt[b];
      in[b] = j == 0 ? bos_row : (j - 1 < y.size() ? lookup(y[j - 1]) : bos_row);
    }
    state = decode_step(tape, state, gather_rows(rows.input, in), enc);
    outputs.push_back(state.feed);
  }
  out.targets.resize(T * B, -1);
  out.target_ids.resize(T * B, -1);
  for (std::size_t j = 0; j < T; ++j)
    for (std::size_t b = 0; b < B; ++b) {
      const auto& y = batch.tgt[b];
      const int id = j < y.size() ? y[j] : (j == y.size() ? kEos : -1);
      if (id >= 0) {
        out.targets[j * B + b] = lookup(id);
        out.target_ids[j * B + b] = id;
      }
    }
  out.logits = matmul_nt(concat_rows(outputs), rows.softmax);
  return out;
}

template <typename Real>
Var<Real> Model<Real>::loss(Tape<Real>& tape, const Batch& batch, const SampledSupport* support, std::size_t min_steps) const {
  auto tf = teacher_forced(tape, batch, support, min_steps);
  return softmax_xent_rows(tf.logits, tf.targets);
}

template class Model<float>;
template class Model<double>;

}  // namespace cgnmt::nmt
