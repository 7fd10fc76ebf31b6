// SPDX-License-Identifier: Apache-2.0
#include "char_embed/char_embed.hpp"

#include <algorithm>

#include "tensor/errors.hpp"

namespace cgnmt::charemb {

EmbedMode parse_mode(std::string_view text) {
  if (text == "std") return EmbedMode::Std;
  if (text == "c") return EmbedMode::C;
  if (text == "cg") return EmbedMode::CG;
  fail(ErrorCode::Config, "mode must be std, c or cg, got \"" + std::string(text) + "\"");
}

SideOverride parse_side_override(std::string_view text) {
  if (text == "both") return SideOverride::Both;
  if (text == "input-only") return SideOverride::InputOnly;
  if (text == "softmax-only") return SideOverride::SoftmaxOnly;
  fail(ErrorCode::Config, "side override must be input-only, softmax-only or both, got \"" + std::string(text) + "\"");
}

const char* mode_name(EmbedMode mode) {
  switch (mode) {
    case EmbedMode::Std: return "std";
    case EmbedMode::C: return "c";
    case EmbedMode::CG: return "cg";
  }
  return "?";
}

const char* side_override_name(SideOverride side) {
  switch (side) {
    case SideOverride::Both: return "both";
    case SideOverride::InputOnly: return "input-only";
    case SideOverride::SoftmaxOnly: return "softmax-only";
  }
  return "?";
}

SideModes side_modes(EmbedMode mode, SideOverride side) {
  return {side == SideOverride::SoftmaxOnly ? EmbedMode::Std : mode, side == SideOverride::InputOnly ? EmbedMode::Std : mode};
}

template <typename Real>
Var<Real> mix(const Var<Real>& standard, const Var<Real>& composed, const Var<Real>& gates) {
  if (standard.shape() != composed.shape() || standard.shape() != gates.shape())
    fail(ErrorCode::Dimension, "mix: shapes " + shape_string(standard.shape()) + ", " + shape_string(composed.shape()) + ", " +
                                   shape_string(gates.shape()) + " differ");
  return add(mul(gates, standard), mul(one_minus(gates), composed));
}

template <typename Real>
CharEmbedding<Real>::CharEmbedding(const ComposerConfig& config, subword::SpellingTable spellings, std::size_t num_chars,
                                   ParameterSet<Real>& params, Rng& rng, bool with_composer)
    : config_(config), spellings_(std::move(spellings)), num_chars_(num_chars) {
  const std::size_t E = config_.embed_dim, V = spellings_.rows.size();
  if (E == 0 || V == 0) fail(ErrorCode::Config, "char embedding: empty vocabulary or zero dimension");
  const Real s = Real(config_.init_scale);
  w_std_ = &params.add("w_std", random_uniform<Real>({V, E}, rng, -s, s));
  if (!with_composer) return;

  const std::size_t n = config_.widths.size();
  if (n == 0 || E % n != 0) fail(ErrorCode::Config, "embedding size " + std::to_string(E) + " is not divisible by the kernel count");
  for (auto k : config_.widths)
    if (k == 0 || k > subword::kMinSpelling) fail(ErrorCode::Config, "kernel width must lie in [1, 6]");
  char_emb_ = &params.add("char_emb", random_uniform<Real>({num_chars, config_.char_dim}, rng, -s, s));
  for (auto k : config_.widths)
    kernels_.push_back(&params.add("conv.k" + std::to_string(k), random_uniform<Real>({k, config_.char_dim, E / n}, rng, -s, s)));
  for (std::size_t l = 0; l < config_.highway_layers; ++l) {
    const std::string p = "hw" + std::to_string(l + 1) + ".";
    Highway h;
    h.wh = &params.add(p + "wh", random_uniform<Real>({E, E}, rng, -s, s));
    h.bh = &params.add(p + "bh", Tensor<Real>({E}));
    h.wt = &params.add(p + "wt", random_uniform<Real>({E, E}, rng, -s, s));
    h.bt = &params.add(p + "bt", Tensor<Real>({E}, Real(config_.highway_bias)));
    highway_.push_back(h);
  }
  gate_ = &params.add("gate", Tensor<Real>({V, E}));
}

template <typename Real>
Var<Real> CharEmbedding<Real>::highway(Tape<Real>& tape, std::size_t layer, const Var<Real>& x) const {
  const auto& h = highway_[layer];
  auto transform = vsigmoid(add_bias(matmul(x, tape.parameter(*h.wt)), tape.parameter(*h.bt)));
  auto candidate = vrelu(add_bias(matmul(x, tape.parameter(*h.wh)), tape.parameter(*h.bh)));
  return add(mul(transform, candidate), mul(one_minus(transform), x));
}

template <typename Real>
Var<Real> CharEmbedding<Real>::compose(Tape<Real>& tape, const std::vector<std::vector<int>>& rows,
                                       const std::vector<std::uint8_t>& compositional) const {
  if (!has_composer()) fail(ErrorCode::State, "compose: model has no composer");
  if (rows.empty() || rows.size() != compositional.size()) fail(ErrorCode::Dimension, "compose: empty or mismatched spelling batch");
  std::size_t L = 0;
  for (const auto& r : rows) {
    if (r.size() < subword::kMinSpelling)
      fail(ErrorCode::Dimension, "compose: spelling row of length " + std::to_string(r.size()) + " is shorter than 6");
    L = std::max(L, r.size());
  }
  const std::size_t N = rows.size();
  std::vector<int> flat(N * L, subword::kCharPad);
  for (std::size_t n = 0; n < N; ++n) std::copy(rows[n].begin(), rows[n].end(), flat.begin() + long(n * L));
  auto chars = reshape(gather_rows(tape.parameter(*char_emb_), flat), Shape{N, L, config_.char_dim});

  std::vector<Var<Real>> pooled;
  for (std::size_t i = 0; i < kernels_.size(); ++i) {
    const std::size_t k = config_.widths[i];
    std::vector<std::size_t> windows(N);
    for (std::size_t n = 0; n < N; ++n) windows[n] = rows[n].size() - k + 1;
    pooled.push_back(max_over_time(conv1d(chars, tape.parameter(*kernels_[i])), windows));
  }
  auto x = concat_cols(pooled);
  for (std::size_t l = 0; l < highway_.size(); ++l) x = highway(tape, l, x);

  std::vector<int> fixed;
  for (std::size_t n = 0; n < N; ++n)
    if (!compositional[n]) fixed.push_back(int(n));
  return fixed.empty() ? x : pin_rows(x, fixed, Real(0));
}

template <typename Real>
Var<Real> CharEmbedding<Real>::compose_ids(Tape<Real>& tape, const std::vector<int>& ids) const {
  std::vector<std::vector<int>> rows;
  std::vector<std::uint8_t> comp;
  rows.reserve(ids.size());
  for (int id : ids) {
    if (id < 0 || std::size_t(id) >= vocab_size())
      fail(ErrorCode::Index, "compose: type id " + std::to_string(id) + " outside vocabulary of " + std::to_string(vocab_size()));
    rows.push_back(spellings_.rows[std::size_t(id)]);
    comp.push_back(spellings_.compositional[std::size_t(id)]);
  }
  return compose(tape, rows, comp);
}

template <typename Real>
Var<Real> CharEmbedding<Real>::standard(Tape<Real>& tape, const std::vector<int>& ids) const {
  return gather_rows(tape.parameter(*w_std_), ids);
}

template <typename Real>
Var<Real> CharEmbedding<Real>::gates(Tape<Real>& tape, const std::vector<int>& ids) const {
  if (!has_composer()) fail(ErrorCode::State, "gate: model has no composer");
  auto g = vsigmoid(gather_rows(tape.parameter(*gate_), ids));
  if (gate_dropout_ > 0 && tape.grad_enabled() && dropout_rng_) {
    Tensor<Real> keep(g.shape(), Real(1));
    std::bernoulli_distribution drop(gate_dropout_);
    for (auto& v : keep.values()) v = drop(*dropout_rng_) ? Real(0) : Real(1);
    g = mul(g, tape.constant(std::move(keep)));
  }
  std::vector<int> fixed;
  for (std::size_t n = 0; n < ids.size(); ++n)
    if (!spellings_.compositional[std::size_t(ids[n])]) fixed.push_back(int(n));
  return fixed.empty() ? g : pin_rows(g, fixed, Real(1));
}

template <typename Real>
Tensor<Real> CharEmbedding<Real>::gate(int id) const {
  if (id < 0 || std::size_t(id) >= vocab_size()) fail(ErrorCode::Index, "gate: type id " + std::to_string(id) + " out of range");
  Tape<Real> tape(false);
  return gates(tape, {id}).value().reshaped({dim()});
}

template <typename Real>
Var<Real> CharEmbedding<Real>::rows(Tape<Real>& tape, const std::vector<int>& ids, EmbedMode mode) const {
  switch (mode) {
    case EmbedMode::Std:
      return standard(tape, ids);
    case EmbedMode::C: {
      Tensor<Real> g({ids.size(), dim()});
      for (std::size_t n = 0; n < ids.size(); ++n)
        if (!spellings_.compositional.at(std::size_t(ids[n]))) std::fill_n(g.data() + n * dim(), dim(), Real(1));
      auto comp = compose_ids(tape, ids);
      return mix(standard(tape, ids), comp, tape.constant(std::move(g)));
    }
    case EmbedMode::CG: {
      auto comp = compose_ids(tape, ids);
      return mix(standard(tape, ids), comp, gates(tape, ids));
    }
  }
  fail(ErrorCode::Config, "unknown embedding mode");
}

template <typename Real>
std::pair<Var<Real>, Var<Real>> CharEmbedding<Real>::tied_rows(Tape<Real>& tape, const std::vector<int>& ids, SideModes modes) const {
  auto in = rows(tape, ids, modes.input);
  if (modes.softmax == modes.input) return {in, in};
  return {in, rows(tape, ids, modes.softmax)};
}

template <typename Real>
void CharEmbedding<Real>::set_gate_dropout(double rate, Rng* rng) {
  if (rate < 0 || rate >= 1) fail(ErrorCode::Config, "gate dropout must lie in [0, 1)");
  gate_dropout_ = rate;
  dropout_rng_ = rng;
}

template class CharEmbedding<float>;
template class CharEmbedding<double>;
template Var<float> mix(const Var<float>&, const Var<float>&, const Var<float>&);
template Var<double> mix(const Var<double>&, const Var<double>&, const Var<double>&);

}  // namespace cgnmt::charemb
