// SPDX-License-Identifier: Apache-2.0
#include "training/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <functional>

#include "subword/text.hpp"
#include "tensor/errors.hpp"
#include "training/digest.hpp"

namespace cgnmt::training {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace((unsigned char)s.front())) s.remove_prefix(1);
  while (!s.empty() && std::isspace((unsigned char)s.back())) s.remove_suffix(1);
  return s;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, const char* want) {
  fail(ErrorCode::Config, "config key '" + std::string(key) + "': expected " + want + ", got \"" + std::string(value) + "\"");
}

std::size_t parse_count(std::string_view key, std::string_view v) {
  std::size_t n = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), n);
  if (v.empty() || ec != std::errc() || p != v.data() + v.size()) bad_value(key, v, "a non-negative integer");
  return n;
}

double parse_real(std::string_view key, std::string_view v) {
  double d = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), d);
  if (v.empty() || ec != std::errc() || p != v.data() + v.size() || !std::isfinite(d)) bad_value(key, v, "a finite number");
  return d;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad_value(key, v, "true or false");
}

std::string real_text(double d) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, d);
  return std::string(buf, p);
}

// Keys that do not change the parameters produced for a given epoch.
bool outside_digest(const std::string& key) {
  return key == "max_epochs" || key == "beam" || key == "max_decode_len" || key == "splits" || key == "normalize_length" ||
         key == "lowercase";
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size < 1) fail(ErrorCode::Config, "batch_size must be at least 1");
  if (!(initial_lr > 0)) fail(ErrorCode::Config, "initial_lr must be positive");
  if (!(min_lr > 0) || min_lr > initial_lr) fail(ErrorCode::Config, "min_lr must satisfy 0 < min_lr <= initial_lr");
  if (!(decay > 0) || decay > 1) fail(ErrorCode::Config, "decay must lie in (0, 1]");
  if (decay_start_epoch < 1) fail(ErrorCode::Config, "decay_start_epoch must be at least 1");
  if (max_epochs < 1) fail(ErrorCode::Config, "max_epochs must be at least 1");
  if (beam < 1 || max_decode_len < 1 || splits < 1) fail(ErrorCode::Config, "beam, max_decode_len and splits must be at least 1");
  if (vocab_size < 1) fail(ErrorCode::Config, "vocab_size must be at least 1");
  if (gate_dropout < 0 || gate_dropout >= 1) fail(ErrorCode::Config, "gate_dropout must lie in [0, 1)");
  if (embed_dim % 4 != 0) fail(ErrorCode::Config, "embed_dim must be divisible by 4");
  model_config().validate();
}

nmt::ModelConfig TrainConfig::model_config() const {
  nmt::ModelConfig m;
  m.embed_dim = embed_dim;
  m.hidden_dim = hidden_dim;
  m.encoder_dim = encoder_dim;
  m.layers = layers;
  m.mode = mode;
  m.side = side;
  m.composer.embed_dim = embed_dim;
  m.composer.char_dim = char_dim;
  m.composer.highway_bias = highway_bias;
  m.composer.init_scale = init_scale;
  m.init_scale = init_scale;
  return m;
}

nmt::BeamOptions TrainConfig::beam_options() const { return {beam, max_decode_len, splits, normalize_length}; }

void TrainConfig::set(std::string_view key, std::string_view value) {
  const std::string k(key);
  auto v = trim(value);
  static const std::map<std::string, std::function<void(TrainConfig&, std::string_view, std::string_view)>> setters{
      {"mode", [](TrainConfig& c, auto, auto v) { c.mode = charemb::parse_mode(v); }},
      {"side_override", [](TrainConfig& c, auto, auto v) { c.side = charemb::parse_side_override(v); }},
      {"bpe_merges", [](TrainConfig& c, auto, auto v) { c.bpe_merges = subword::MergeSetting::parse(v); }},
      {"vocab_size", [](TrainConfig& c, auto k, auto v) { c.vocab_size = parse_count(k, v); }},
      {"target_lexicon", [](TrainConfig& c, auto, auto v) { c.target_lexicon = std::string(v); }},
      {"embed_dim", [](TrainConfig& c, auto k, auto v) { c.embed_dim = parse_count(k, v); }},
      {"hidden_dim", [](TrainConfig& c, auto k, auto v) { c.hidden_dim = parse_count(k, v); }},
      {"encoder_dim", [](TrainConfig& c, auto k, auto v) { c.encoder_dim = parse_count(k, v); }},
      {"layers", [](TrainConfig& c, auto k, auto v) { c.layers = parse_count(k, v); }},
      {"char_dim", [](TrainConfig& c, auto k, auto v) { c.char_dim = parse_count(k, v); }},
      {"highway_bias", [](TrainConfig& c, auto k, auto v) { c.highway_bias = parse_real(k, v); }},
      {"init_scale", [](TrainConfig& c, auto k, auto v) { c.init_scale = parse_real(k, v); }},
      {"batch_size", [](TrainConfig& c, auto k, auto v) { c.batch_size = parse_count(k, v); }},
      {"initial_lr", [](TrainConfig& c, auto k, auto v) { c.initial_lr = parse_real(k, v); }},
      {"decay", [](TrainConfig& c, auto k, auto v) { c.decay = parse_real(k, v); }},
      {"decay_start_epoch", [](TrainConfig& c, auto k, auto v) { c.decay_start_epoch = parse_count(k, v); }},
      {"min_lr", [](TrainConfig& c, auto k, auto v) { c.min_lr = parse_real(k, v); }},
      {"max_epochs", [](TrainConfig& c, auto k, auto v) { c.max_epochs = parse_count(k, v); }},
      {"max_grad_norm", [](TrainConfig& c, auto k, auto v) { c.max_grad_norm = parse_real(k, v); }},
      {"loss_normalization",
       [](TrainConfig& c, auto k, auto v) {
         if (v == "sentences") c.loss_normalization = LossNormalization::Sentences;
         else if (v == "tokens") c.loss_normalization = LossNormalization::Tokens;
         else bad_value(k, v, "sentences or tokens");
       }},
      {"sample_size", [](TrainConfig& c, auto k, auto v) { c.sample_size = parse_count(k, v); }},
      {"max_source_len", [](TrainConfig& c, auto k, auto v) { c.max_source_len = parse_count(k, v); }},
      {"gate_dropout", [](TrainConfig& c, auto k, auto v) { c.gate_dropout = parse_real(k, v); }},
      {"seed", [](TrainConfig& c, auto k, auto v) { c.seed = parse_count(k, v); }},
      {"beam", [](TrainConfig& c, auto k, auto v) { c.beam = parse_count(k, v); }},
      {"max_decode_len", [](TrainConfig& c, auto k, auto v) { c.max_decode_len = parse_count(k, v); }},
      {"splits", [](TrainConfig& c, auto k, auto v) { c.splits = parse_count(k, v); }},
      {"normalize_length", [](TrainConfig& c, auto k, auto v) { c.normalize_length = parse_bool(k, v); }},
      {"lowercase", [](TrainConfig& c, auto k, auto v) { c.lowercase = parse_bool(k, v); }},
  };
  auto it = setters.find(k);
  if (it == setters.end()) fail(ErrorCode::Config, "unknown config key '" + k + "'");
  it->second(*this, key, v);
}

std::map<std::string, std::string> TrainConfig::to_map() const {
  return {
      {"mode", charemb::mode_name(mode)},
      {"side_override", charemb::side_override_name(side)},
      {"bpe_merges", bpe_merges.str()},
      {"vocab_size", std::to_string(vocab_size)},
      {"target_lexicon", target_lexicon},
      {"embed_dim", std::to_string(embed_dim)},
      {"hidden_dim", std::to_string(hidden_dim)},
      {"encoder_dim", std::to_string(encoder_dim)},
      {"layers", std::to_string(layers)},
      {"char_dim", std::to_string(char_dim)},
      {"highway_bias", real_text(highway_bias)},
      {"init_scale", real_text(init_scale)},
      {"batch_size", std::to_string(batch_size)},
      {"initial_lr", real_text(initial_lr)},
      {"decay", real_text(decay)},
      {"decay_start_epoch", std::to_string(decay_start_epoch)},
      {"min_lr", real_text(min_lr)},
      {"max_epochs", std::to_string(max_epochs)},
      {"max_grad_norm", real_text(max_grad_norm)},
      {"loss_normalization", loss_normalization == LossNormalization::Tokens ? "tokens" : "sentences"},
      {"sample_size", std::to_string(sample_size)},
      {"max_source_len", std::to_string(max_source_len)},
      {"gate_dropout", real_text(gate_dropout)},
      {"seed", std::to_string(seed)},
      {"beam", std::to_string(beam)},
      {"max_decode_len", std::to_string(max_decode_len)},
      {"splits", std::to_string(splits)},
      {"normalize_length", normalize_length ? "true" : "false"},
      {"lowercase", lowercase ? "true" : "false"},
  };
}

std::string TrainConfig::to_text() const {
  std::string out;
  for (const auto& [k, v] : to_map()) out += k + " = " + v + "\n";
  return out;
}

TrainConfig TrainConfig::from_text(std::string_view text) {
  TrainConfig c;
  std::size_t pos = 0, line_no = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail(ErrorCode::Config, "config line " + std::to_string(line_no) + ": expected key = value");
    c.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return c;
}

TrainConfig TrainConfig::from_file(const std::string& path) { return from_text(subword::read_file(path)); }

TrainConfig TrainConfig::full_scale_preset() {
  TrainConfig c;
  c.embed_dim = c.hidden_dim = c.encoder_dim = 1000;
  c.sample_size = 20000;
  c.vocab_size = 100000;
  return c;
}

std::string TrainConfig::digest() const {
  std::string canon;
  for (const auto& [k, v] : to_map())
    if (!outside_digest(k)) canon += k + "=" + v + "\n";
  return sha256_hex(canon);
}

double lr_at_epoch(const TrainConfig& config, std::size_t epoch) {
  if (epoch < 1) fail(ErrorCode::InvalidArgument, "epochs are numbered from 1");
  if (epoch < config.decay_start_epoch) return config.initial_lr;
  const double lr = config.initial_lr * std::pow(config.decay, double(epoch - config.decay_start_epoch + 1));
  return std::max(config.min_lr, lr);
}

}  // namespace cgnmt::training
