// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <functional>
#include <optional>

#include "tensor/sgd.hpp"
#include "training/config.hpp"
#include "training/corpus.hpp"

namespace cgnmt::training {

struct CheckpointInfo {
  std::size_t epoch = 0;
  double valid_accuracy = 0;
  double train_loss = 0;
  std::string config_digest;
  std::filesystem::path path;  // the .ckpt archive
};

/// "epoch007.ckpt"
std::string checkpoint_name(std::size_t epoch);

/// Writes the archive and its ".meta" sidecar.
template <typename Real>
CheckpointInfo save_checkpoint(const std::filesystem::path& dir, std::size_t epoch, const ParameterSet<Real>& params,
                               double valid_accuracy, double train_loss, const std::string& config_digest);
CheckpointInfo read_checkpoint_info(const std::filesystem::path& ckpt);
/// Sorted by epoch; missing directory yields an empty list.
std::vector<CheckpointInfo> list_checkpoints(const std::filesystem::path& dir);
/// An empty `expected_digest` skips the digest check.
template <typename Real>
void load_checkpoint(const CheckpointInfo& info, ParameterSet<Real>& params, const std::string& expected_digest = {});

/// Highest validation accuracy, earliest epoch on ties.
const CheckpointInfo& select_model(const std::vector<CheckpointInfo>& checkpoints);
void write_best_marker(const std::filesystem::path& dir, const CheckpointInfo& best);
std::filesystem::path read_best_marker(const std::filesystem::path& dir);

/// Teacher-forced argmax accuracy over every target token, EOS included.
/// PAD and BOS are excluded from the argmax, as in decoding.
template <typename Real>
double token_accuracy(const nmt::Model<Real>& model, const Corpus& corpus, std::size_t batch_size);

struct EpochRecord {
  std::size_t epoch = 0;
  double learning_rate = 0;
  double train_loss = 0;  // summed token NLL over the epoch
  std::size_t train_tokens = 0;
  double valid_accuracy = 0;
  std::filesystem::path checkpoint;
};

/// Epoch loop with the decaying SGD schedule. Each batch is stepped on its
/// summed NLL divided by the sentence or token count; checkpoints land in `checkpoint_dir` when it is set.
template <typename Real>
class Trainer {
 public:
  Trainer(const TrainConfig& config, nmt::Model<Real>& model, const Corpus& train, const Corpus& valid,
          std::filesystem::path checkpoint_dir = {});

  std::size_t next_epoch() const noexcept { return next_epoch_; }
  const std::vector<EpochRecord>& history() const noexcept { return history_; }
  void on_epoch(std::function<void(const EpochRecord&)> callback) { callback_ = std::move(callback); }

  /// Restores the newest checkpoint. Returns false when there is none.
  bool resume();
  EpochRecord train_epoch();
  /// Trains through max_epochs and refreshes the best marker.
  std::vector<EpochRecord> run();

 private:
  TrainConfig config_;
  nmt::Model<Real>& model_;
  const Corpus& train_;
  const Corpus& valid_;
  std::filesystem::path dir_;
  std::string digest_;
  Sgd<Real> sgd_;
  Rng dropout_rng_;
  std::size_t next_epoch_ = 1;
  std::vector<EpochRecord> history_;
  std::function<void(const EpochRecord&)> callback_;
};

extern template class Trainer<float>;
extern template class Trainer<double>;

}  // namespace cgnmt::training
