// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nmt/translator.hpp"
#include "subword/bpe.hpp"
#include "subword/spelling.hpp"
#include "subword/vocab.hpp"
#include "training/trainer.hpp"

namespace cgnmt::pipeline {

namespace fs = std::filesystem;

/// One directory per run: config.txt, manifest.txt, data/, checkpoints/, hyps/, reports/.
struct RunLayout {
  fs::path root;
  fs::path config() const { return root / "config.txt"; }
  fs::path manifest() const { return root / "manifest.txt"; }
  fs::path data() const { return root / "data"; }
  fs::path checkpoints() const { return root / "checkpoints"; }
  fs::path hyps() const { return root / "hyps"; }
  fs::path reports() const { return root / "reports"; }
  fs::path bpe(const char* side) const { return data() / (std::string("bpe.") + side); }
  fs::path vocab(const char* side) const { return data() / (std::string("vocab.") + side); }
  fs::path text(const char* split, const char* side) const { return data() / (std::string(split) + "." + side); }
  void create() const;
};

struct ParallelFiles {
  std::string train_src, train_tgt, valid_src, valid_tgt;
};

/// Per-side BPE (absent at word level) and vocabularies of a prepared run.
struct Preprocessing {
  std::optional<subword::BpeModel> src_bpe, tgt_bpe;
  subword::Vocabulary src_vocab, tgt_vocab;
  subword::CharVocab chars;

  std::vector<std::string> segment_source(const std::vector<std::string>& lines) const;
  std::vector<std::string> segment_target(const std::vector<std::string>& lines) const;
  training::Corpus numericalize(const std::vector<std::string>& src, const std::vector<std::string>& tgt) const;
};

struct PrepareReport {
  training::FilterStats train, valid;
  std::vector<fs::path> outputs;
};

/// Filters, learns BPE per side on the training text, applies it, builds the
/// vocabularies and writes everything under the run directory.
PrepareReport prepare(const training::TrainConfig& config, const ParallelFiles& files, const fs::path& run_dir);
Preprocessing load_preprocessing(const RunLayout& run);

/// Model built from a prepared run's vocabularies.
std::unique_ptr<nmt::Model<float>> build_model(const training::TrainConfig& config, const Preprocessing& prep);

struct TrainReport {
  std::vector<training::EpochRecord> epochs;
  training::CheckpointInfo best;
  bool resumed = false;
};

/// Trains a prepared run, resuming from its newest checkpoint when present.
TrainReport train(const training::TrainConfig& config, const fs::path& run_dir,
                  std::function<void(const training::EpochRecord&)> progress = {});

/// A trained run loaded for decoding. Translation is reentrant.
class TrainedRun {
 public:
  /// `checkpoint` empty selects the "best" marker.
  TrainedRun(const fs::path& run_dir, const fs::path& checkpoint = {});
  TrainedRun(const TrainedRun&) = delete;
  TrainedRun& operator=(const TrainedRun&) = delete;

  const training::TrainConfig& config() const noexcept { return config_; }
  const fs::path& checkpoint() const noexcept { return checkpoint_; }

  /// Raw source line in, detokenized (BPE undone) target line out. With
  /// `segmented` the line already carries the run's source BPE.
  std::string translate(const std::string& line, const nmt::BeamOptions& options, bool segmented = false) const;
  /// Lines split across up to `threads` workers; output order follows input.
  std::vector<std::string> translate_all(const std::vector<std::string>& lines, const nmt::BeamOptions& options,
                                         std::size_t threads = 1, bool segmented = false) const;

 private:
  training::TrainConfig config_;
  fs::path checkpoint_;
  Preprocessing prep_;
  std::unique_ptr<nmt::Model<float>> model_;
  std::unique_ptr<nmt::Translator<float>> translator_;
};

/// Worker cap from CGNMT_THREADS, defaulting to the hardware concurrency.
std::size_t thread_limit();

}  // namespace cgnmt::pipeline
