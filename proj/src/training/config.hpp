// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <string_view>

#include "nmt/model.hpp"
#include "nmt/translator.hpp"
#include "subword/bpe.hpp"

namespace cgnmt::training {

/// Divisor applied to a batch's summed NLL before backpropagation.
enum class LossNormalization { Sentences, Tokens };

/// Everything a run needs. Serialized as flat "key = value" text.
struct TrainConfig {
  charemb::EmbedMode mode = charemb::EmbedMode::CG;
  charemb::SideOverride side = charemb::SideOverride::Both;
  subword::MergeSetting bpe_merges = subword::MergeSetting::word();
  std::size_t vocab_size = 100000;
  std::string target_lexicon;  // optional file of extra target types

  std::size_t embed_dim = 64;
  std::size_t hidden_dim = 64;
  std::size_t encoder_dim = 64;
  std::size_t layers = 2;
  std::size_t char_dim = 50;
  double highway_bias = -2.0;
  double init_scale = 0.1;

  std::size_t batch_size = 80;
  double initial_lr = 1.0;
  double decay = 0.5;
  std::size_t decay_start_epoch = 9;
  double min_lr = 0.001;
  std::size_t max_epochs = 13;
  double max_grad_norm = 5.0;
  LossNormalization loss_normalization = LossNormalization::Sentences;
  std::size_t sample_size = 0;  // 0: full softmax
  std::size_t max_source_len = 50;
  double gate_dropout = 0.0;
  std::uint64_t seed = 1;

  std::size_t beam = 5;
  std::size_t max_decode_len = 100;
  std::size_t splits = 1;
  bool normalize_length = false;
  bool lowercase = true;

  void validate() const;
  nmt::ModelConfig model_config() const;
  nmt::BeamOptions beam_options() const;

  /// Applies one key; unknown keys and malformed values raise Config errors.
  void set(std::string_view key, std::string_view value);
  std::map<std::string, std::string> to_map() const;
  std::string to_text() const;
  static TrainConfig from_text(std::string_view text);
  static TrainConfig from_file(const std::string& path);
  /// Larger preset with 1000-unit layers and a 20k sample.
  static TrainConfig full_scale_preset();

  /// Digest over every key that influences the trained parameters.
  std::string digest() const;
};

double lr_at_epoch(const TrainConfig& config, std::size_t epoch);

}  // namespace cgnmt::training
