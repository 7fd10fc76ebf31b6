// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <optional>

#include "pipeline/run.hpp"

namespace cgnmt::pipeline {

struct SweepSpec {
  std::vector<subword::MergeSetting> settings;
  training::TrainConfig base;

  /// Strictly increasing merge counts, word level last.
  void validate() const;
  /// Comma-separated list, e.g. "0,1600,word".
  static std::vector<subword::MergeSetting> parse_settings(std::string_view text);
};

struct SweepCorpora {
  ParallelFiles train_valid;
  std::string test_src, test_tgt;
};

struct SweepCell {
  subword::MergeSetting setting;
  std::optional<double> bleu_std, bleu_cg;
  std::string error;
  std::optional<double> delta() const;
};

/// Trains a Std and a CG model per setting with the same seed, decodes the
/// test set with each best checkpoint and scores it. A failing setting is
/// recorded and the sweep moves on.
std::vector<SweepCell> run_sweep(const SweepSpec& spec, const SweepCorpora& corpora, const fs::path& out_dir,
                                 std::function<void(const std::string&)> log = {});

/// Header "setting bleu_std bleu_cg delta"; failed cells read "NA".
std::string sweep_table(const std::vector<SweepCell>& cells);
/// "index merges delta" rows for plotting delta against granularity.
std::string sweep_plot_data(const std::vector<SweepCell>& cells);

/// Decodes `src_path` with a trained run and scores it against `ref_path`.
double decode_and_score(const TrainedRun& run, const std::string& src_path, const std::string& ref_path, const fs::path& hyp_path,
                        const nmt::BeamOptions& options, bool lowercase, std::size_t threads);

}  // namespace cgnmt::pipeline
