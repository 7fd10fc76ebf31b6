// SPDX-License-Identifier: Apache-2.0
#include "training/trainer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>

#include "nmt/softmax.hpp"
#include "subword/text.hpp"
#include "tensor/archive.hpp"
#include "tensor/errors.hpp"
#include "tensor/ops.hpp"

namespace cgnmt::training {

namespace fs = std::filesystem;

namespace {

std::string exact(double d) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", d);
  return buf;
}

fs::path meta_path(const fs::path& ckpt) {
  fs::path p = ckpt;
  p.replace_extension(".meta");
  return p;
}

}  // namespace

std::string checkpoint_name(std::size_t epoch) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "epoch%03zu.ckpt", epoch);
  return buf;
}

template <typename Real>
CheckpointInfo save_checkpoint(const fs::path& dir, std::size_t epoch, const ParameterSet<Real>& params, double valid_accuracy,
                               double train_loss, const std::string& config_digest) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());
  CheckpointInfo info{epoch, valid_accuracy, train_loss, config_digest, dir / checkpoint_name(epoch)};
  write_archive(info.path, to_archive(params));
  subword::write_file(meta_path(info.path).string(), "epoch = " + std::to_string(epoch) + "\nvalid_accuracy = " + exact(valid_accuracy) +
                                                         "\ntrain_loss = " + exact(train_loss) + "\nconfig_digest = " + config_digest + "\n");
  return info;
}

CheckpointInfo read_checkpoint_info(const fs::path& ckpt) {
  const auto meta = meta_path(ckpt);
  std::map<std::string, std::string> kv;
  for (const auto& line : subword::read_lines(meta.string())) {
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) fail(ErrorCode::Format, meta.string() + ": malformed line \"" + line + "\"");
    kv[line.substr(0, eq)] = line.substr(eq + 3);
  }
  for (const char* key : {"epoch", "valid_accuracy", "train_loss", "config_digest"})
    if (!kv.count(key)) fail(ErrorCode::Format, meta.string() + ": missing " + key);
  CheckpointInfo info;
  info.path = ckpt;
  info.config_digest = kv["config_digest"];
  try {
    info.epoch = std::stoul(kv["epoch"]);
    info.valid_accuracy = std::stod(kv["valid_accuracy"]);
    info.train_loss = std::stod(kv["train_loss"]);
  } catch (const std::exception&) {
    fail(ErrorCode::Format, meta.string() + ": unreadable number");
  }
  return info;
}

std::vector<CheckpointInfo> list_checkpoints(const fs::path& dir) {
  std::vector<CheckpointInfo> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (name.rfind("epoch", 0) == 0 && entry.path().extension() == ".ckpt")
      out.push_back(read_checkpoint_info(entry.path()));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.epoch < b.epoch; });
  return out;
}

template <typename Real>
void load_checkpoint(const CheckpointInfo& info, ParameterSet<Real>& params, const std::string& expected_digest) {
  if (!expected_digest.empty() && info.config_digest != expected_digest)
    fail(ErrorCode::Config, info.path.string() + " was produced by a different configuration (digest " + info.config_digest + ")");
  from_archive(read_archive(info.path), params);
}

const CheckpointInfo& select_model(const std::vector<CheckpointInfo>& checkpoints) {
  if (checkpoints.empty()) fail(ErrorCode::InvalidArgument, "select_model: no checkpoints");
  const CheckpointInfo* best = &checkpoints.front();
  for (const auto& c : checkpoints)
    if (c.valid_accuracy > best->valid_accuracy || (c.valid_accuracy == best->valid_accuracy && c.epoch < best->epoch)) best = &c;
  return *best;
}

void write_best_marker(const fs::path& dir, const CheckpointInfo& best) {
  subword::write_file((dir / "best").string(), best.path.filename().string() + "\n");
}

fs::path read_best_marker(const fs::path& dir) {
  const auto lines = subword::read_lines((dir / "best").string());
  if (lines.empty() || lines.front().empty()) fail(ErrorCode::Format, (dir / "best").string() + ": empty marker");
  return dir / lines.front();
}

template <typename Real>
double token_accuracy(const nmt::Model<Real>& model, const Corpus& corpus, std::size_t batch_size) {
  std::size_t correct = 0, total = 0;
  for (const auto& batch : ordered_batches(corpus, batch_size)) {
    Tape<Real> tape(false);
    const auto tf = model.teacher_forced(tape, batch, nullptr);
    const auto& logits = tf.logits.value();
    for (std::size_t r = 0; r < tf.targets.size(); ++r) {
      if (tf.targets[r] < 0) continue;
      const auto row = logits.row(r);
      std::size_t best = subword::kUnk;
      for (std::size_t v = 0; v < row.size(); ++v)
        if (v != std::size_t(subword::kPad) && v != std::size_t(subword::kBos) && row[v] > row[best]) best = v;
      correct += best == std::size_t(tf.targets[r]);
      ++total;
    }
  }
  if (total == 0) fail(ErrorCode::InvalidArgument, "token_accuracy: empty corpus");
  return double(correct) / double(total);
}

template <typename Real>
Trainer<Real>::Trainer(const TrainConfig& config, nmt::Model<Real>& model, const Corpus& train, const Corpus& valid,
                       fs::path checkpoint_dir)
    : config_(config),
      model_(model),
      train_(train),
      valid_(valid),
      dir_(std::move(checkpoint_dir)),
      digest_(config.digest()),
      sgd_(Real(config.initial_lr), Real(config.max_grad_norm)) {
  config_.validate();
  if (train_.size() == 0) fail(ErrorCode::InvalidArgument, "training corpus is empty");
}

template <typename Real>
bool Trainer<Real>::resume() {
  if (dir_.empty()) return false;
  const auto found = list_checkpoints(dir_);
  if (found.empty()) return false;
  load_checkpoint(found.back(), model_.params(), digest_);
  history_.clear();
  for (const auto& c : found)
    history_.push_back({c.epoch, lr_at_epoch(config_, c.epoch), c.train_loss, 0, c.valid_accuracy, c.path});
  next_epoch_ = found.back().epoch + 1;
  return true;
}

template <typename Real>
EpochRecord Trainer<Real>::train_epoch() {
  const std::size_t epoch = next_epoch_;
  EpochRecord rec;
  rec.epoch = epoch;
  rec.learning_rate = lr_at_epoch(config_, epoch);
  sgd_.set_learning_rate(Real(rec.learning_rate));

  auto& embedding = model_.embedding();
  if (embedding.has_composer() && config_.gate_dropout > 0) {
    dropout_rng_.seed(derive_seed(config_.seed, "gate_dropout", epoch));
    embedding.set_gate_dropout(config_.gate_dropout, &dropout_rng_);
  }

  const std::size_t vocab = model_.target_vocab_size();
  const bool sampled = config_.sample_size > 0 && config_.sample_size < vocab;
  auto& params = model_.params();
  params.zero_grad();
  const auto batches = make_batches(train_, config_.batch_size, config_.seed, epoch);
  Tape<Real> tape;
  for (std::size_t k = 0; k < batches.size(); ++k) {
    const auto& batch = batches[k];
    tape.clear();
    std::optional<nmt::SampledSupport> support;
    if (sampled) {
      Rng rng(derive_seed(config_.seed, "support", (std::uint64_t(epoch) << 32) | k));
      support = nmt::sample_support(nmt::batch_types(batch), config_.sample_size, vocab, rng);
    }
    const auto loss = model_.loss(tape, batch, support ? &*support : nullptr);
    const double value = double(loss.value().item());
    if (!std::isfinite(value))
      fail(ErrorCode::Numeric, "training diverged: non-finite loss at epoch " + std::to_string(epoch) + ", batch " + std::to_string(k + 1) +
                                   " (learning rate " + exact(rec.learning_rate) + ")");
    const std::size_t tokens = batch.target_tokens();
    const std::size_t divisor = config_.loss_normalization == LossNormalization::Tokens ? tokens : batch.size();
    tape.backward(scale(loss, Real(1) / Real(divisor)));
    sgd_.step(params);
    rec.train_loss += value;
    rec.train_tokens += tokens;
  }
  tape.clear();
  embedding.set_gate_dropout(0.0, nullptr);

  if (valid_.size() > 0) rec.valid_accuracy = token_accuracy(model_, valid_, config_.batch_size);
  if (!dir_.empty()) rec.checkpoint = save_checkpoint(dir_, epoch, params, rec.valid_accuracy, rec.train_loss, digest_).path;
  history_.push_back(rec);
  ++next_epoch_;
  if (callback_) callback_(rec);
  return rec;
}

template <typename Real>
std::vector<EpochRecord> Trainer<Real>::run() {
  while (next_epoch_ <= config_.max_epochs) train_epoch();
  if (!dir_.empty()) {
    const auto found = list_checkpoints(dir_);
    if (!found.empty()) write_best_marker(dir_, select_model(found));
  }
  return history_;
}

template class Trainer<float>;
template class Trainer<double>;
template CheckpointInfo save_checkpoint(const fs::path&, std::size_t, const ParameterSet<float>&, double, double, const std::string&);
template CheckpointInfo save_checkpoint(const fs::path&, std::size_t, const ParameterSet<double>&, double, double, const std::string&);
template void load_checkpoint(const CheckpointInfo&, ParameterSet<float>&, const std::string&);
template void load_checkpoint(const CheckpointInfo&, ParameterSet<double>&, const std::string&);
template double token_accuracy(const nmt::Model<float>&, const Corpus&, std::size_t);
template double token_accuracy(const nmt::Model<double>&, const Corpus&, std::size_t);

}  // namespace cgnmt::training
