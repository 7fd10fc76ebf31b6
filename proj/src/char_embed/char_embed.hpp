// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "subword/spelling.hpp"
#include "tensor/ops.hpp"
#include "tensor/random.hpp"
#include "tensor/tape.hpp"

namespace cgnmt::charemb {

enum class EmbedMode { Std, C, CG };
enum class SideOverride { Both, InputOnly, SoftmaxOnly };

EmbedMode parse_mode(std::string_view text);
SideOverride parse_side_override(std::string_view text);
const char* mode_name(EmbedMode mode);
const char* side_override_name(SideOverride side);

/// Mode applied to each decoder surface. The untouched side falls back to Std.
struct SideModes {
  EmbedMode input;
  EmbedMode softmax;
};
SideModes side_modes(EmbedMode mode, SideOverride side);

struct ComposerConfig {
  std::size_t embed_dim = 64;
  std::size_t char_dim = 50;
  std::vector<std::size_t> widths{3, 4, 5, 6};
  std::size_t highway_layers = 2;
  double highway_bias = -2.0;
  double init_scale = 0.1;
};

/// Standard embedding table plus the spelling composer and per-type gates.
template <typename Real>
class CharEmbedding {
 public:
  /// `with_composer` false registers only "w_std".
  CharEmbedding(const ComposerConfig& config, subword::SpellingTable spellings, std::size_t num_chars,
                ParameterSet<Real>& params, Rng& rng, bool with_composer);

  const ComposerConfig& config() const noexcept { return config_; }
  std::size_t vocab_size() const noexcept { return spellings_.rows.size(); }
  std::size_t dim() const noexcept { return config_.embed_dim; }
  bool has_composer() const noexcept { return char_emb_ != nullptr; }
  const subword::SpellingTable& spellings() const noexcept { return spellings_; }

  /// Composes arbitrary spelling rows -> [n x E]. Rows flagged non-compositional give zeros.
  Var<Real> compose(Tape<Real>& tape, const std::vector<std::vector<int>>& rows, const std::vector<std::uint8_t>& compositional) const;
  /// Composed vectors for vocabulary ids -> [n x E].
  Var<Real> compose_ids(Tape<Real>& tape, const std::vector<int>& ids) const;

  /// Standard rows for ids.
  Var<Real> standard(Tape<Real>& tape, const std::vector<int>& ids) const;
  /// Gate vectors for ids; reserved types read exactly 1.
  Var<Real> gates(Tape<Real>& tape, const std::vector<int>& ids) const;
  Tensor<Real> gate(int id) const;

  /// Embedding rows for ids under a mode: Std rows, C rows (composed, gate fixed at 0)
  /// or CG rows g*std + (1-g)*comp.
  Var<Real> rows(Tape<Real>& tape, const std::vector<int>& ids, EmbedMode mode) const;

  /// Matrices for the decoder input (W_s) and the softmax (W_o) over `ids`.
  /// Sides sharing a mode receive the same tape value.
  std::pair<Var<Real>, Var<Real>> tied_rows(Tape<Real>& tape, const std::vector<int>& ids, SideModes modes) const;

  /// Zeroes each gate coordinate with probability `rate` during training.
  void set_gate_dropout(double rate, Rng* rng);

 private:
  Var<Real> highway(Tape<Real>& tape, std::size_t layer, const Var<Real>& x) const;

  ComposerConfig config_;
  subword::SpellingTable spellings_;
  std::size_t num_chars_;
  Parameter<Real>* w_std_ = nullptr;
  Parameter<Real>* char_emb_ = nullptr;
  Parameter<Real>* gate_ = nullptr;
  std::vector<Parameter<Real>*> kernels_;
  struct Highway {
    Parameter<Real>* wh;
    Parameter<Real>* bh;
    Parameter<Real>* wt;
    Parameter<Real>* bt;
  };
  std::vector<Highway> highway_;
  double gate_dropout_ = 0.0;
  Rng* dropout_rng_ = nullptr;
};

/// Rowwise g*std + (1-g)*comp.
template <typename Real>
Var<Real> mix(const Var<Real>& standard, const Var<Real>& composed, const Var<Real>& gates);

extern template class CharEmbedding<float>;
extern template class CharEmbedding<double>;

}  // namespace cgnmt::charemb
