// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <vector>

#include "char_embed/char_embed.hpp"
#include "tensor/lstm.hpp"

namespace cgnmt::nmt {

struct ModelConfig {
  std::size_t embed_dim = 64;    // target and source embedding size; equals hidden_dim for tying
  std::size_t hidden_dim = 64;   // decoder LSTM size
  std::size_t encoder_dim = 64;  // both directions together
  std::size_t layers = 2;
  charemb::EmbedMode mode = charemb::EmbedMode::CG;
  charemb::SideOverride side = charemb::SideOverride::Both;
  charemb::ComposerConfig composer;
  double init_scale = 0.1;

  void validate() const;
};

/// Source and target sequences, unframed. Targets are decoded as BOS y EOS.
struct Batch {
  std::vector<std::vector<int>> src;
  std::vector<std::vector<int>> tgt;
  std::size_t size() const noexcept { return src.size(); }
  std::size_t target_tokens() const;  // including one EOS per sentence
};

/// Vocabulary subset used by the sampled softmax, sorted and unique.
struct SampledSupport {
  std::vector<int> ids;
  std::vector<std::uint8_t> from_batch;
};

template <typename Real>
struct EncoderOutput {
  Var<Real> states;  // [B x I x encoder_dim]
  std::vector<std::size_t> lengths;
  std::vector<LstmState<Real>> finals;  // per layer, [B x encoder_dim]
};

template <typename Real>
struct DecoderState {
  std::vector<LstmState<Real>> layers;
  Var<Real> feed;       // previous attentional output, [B x hidden_dim]
  Var<Real> attention;  // weights of the last step, [B x I]
};

template <typename Real>
struct Attention {
  Var<Real> context;  // [B x encoder_dim]
  Var<Real> weights;  // [B x I]
};

/// Target-side matrices restricted to `ids`, with the vocabulary -> row map.
template <typename Real>
struct TargetRows {
  Var<Real> input;    // W_s rows
  Var<Real> softmax;  // W_o rows
  std::vector<int> ids;
  std::vector<int> row_of;  // vocabulary id -> row, -1 when absent
};

/// Teacher-forced output rows for a batch, row j*B + b for step j.
template <typename Real>
struct TeacherForced {
  Var<Real> logits;
  std::vector<int> targets;  // support rows, -1 where padded
  std::vector<int> target_ids;
};

/// Attentional encoder-decoder with input feeding and character-aware target matrices.
template <typename Real>
class Model {
 public:
  Model(const ModelConfig& config, std::size_t source_vocab, subword::SpellingTable target_spellings, std::size_t num_chars,
        std::uint64_t seed);
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  const ModelConfig& config() const noexcept { return config_; }
  ParameterSet<Real>& params() noexcept { return params_; }
  const ParameterSet<Real>& params() const noexcept { return params_; }
  const charemb::CharEmbedding<Real>& embedding() const noexcept { return *embedding_; }
  charemb::CharEmbedding<Real>& embedding() noexcept { return *embedding_; }
  std::size_t source_vocab_size() const noexcept { return source_vocab_; }
  std::size_t target_vocab_size() const noexcept { return embedding_->vocab_size(); }
  charemb::SideModes side_modes() const noexcept { return charemb::side_modes(config_.mode, config_.side); }

  EncoderOutput<Real> encode(Tape<Real>& tape, const std::vector<std::vector<int>>& src) const;
  DecoderState<Real> initial_state(Tape<Real>& tape, const EncoderOutput<Real>& enc) const;
  Attention<Real> attend(Tape<Real>& tape, const Var<Real>& query, const EncoderOutput<Real>& enc) const;
  /// One decoder step on already embedded previous tokens [B x E].
  DecoderState<Real> decode_step(Tape<Real>& tape, const DecoderState<Real>& state, const Var<Real>& input,
                                 const EncoderOutput<Real>& enc) const;

  /// Full vocabulary when `support` is null.
  TargetRows<Real> target_rows(Tape<Real>& tape, const SampledSupport* support) const;

  /// `min_steps` pads every target beyond its natural length.
  TeacherForced<Real> teacher_forced(Tape<Real>& tape, const Batch& batch, const SampledSupport* support,
                                     std::size_t min_steps = 0) const;
  /// Summed token NLL of the batch.
  Var<Real> loss(Tape<Real>& tape, const Batch& batch, const SampledSupport* support, std::size_t min_steps = 0) const;

 private:
  struct Direction {
    LstmWeights<Real> bind(Tape<Real>& tape) const;
    Parameter<Real>* wx;
    Parameter<Real>* wh;
    Parameter<Real>* b;
  };
  Direction make_lstm(const std::string& prefix, std::size_t in, std::size_t hidden, Rng& rng);
  std::vector<Var<Real>> run_direction(Tape<Real>& tape, const Direction& dir, const std::vector<Var<Real>>& xs,
                                       const std::vector<std::size_t>& lengths, bool reverse, LstmState<Real>& final_state) const;

  ModelConfig config_;
  std::size_t source_vocab_;
  ParameterSet<Real> params_;
  std::unique_ptr<charemb::CharEmbedding<Real>> embedding_;
  Parameter<Real>* src_emb_ = nullptr;
  std::vector<Direction> enc_fwd_, enc_bwd_, dec_;
  Parameter<Real>* bridge_h_ = nullptr;
  Parameter<Real>* bridge_c_ = nullptr;
  Parameter<Real>* w_a_ = nullptr;
  Parameter<Real>* w_c_ = nullptr;
};

extern template class Model<float>;
extern template class Model<double>;

}  // namespace cgnmt::nmt
