// SPDX-License-Identifier: Apache-2.0
#include "pipeline/sweep.hpp"

#include <cstdio>

#include "eval/bleu.hpp"
#include "subword/text.hpp"
#include "tensor/errors.hpp"

namespace cgnmt::pipeline {

void SweepSpec::validate() const {
  if (settings.empty()) fail(ErrorCode::Config, "sweep: no merge settings");
  for (std::size_t i = 0; i < settings.size(); ++i) {
    if (settings[i].word_level() && i + 1 != settings.size()) fail(ErrorCode::Config, "sweep: word level must come last");
    if (i > 0 && !settings[i].word_level() && *settings[i].merges <= *settings[i - 1].merges)
      fail(ErrorCode::Config, "sweep: merge settings must be strictly increasing");
  }
  base.validate();
}

std::vector<subword::MergeSetting> SweepSpec::parse_settings(std::string_view text) {
  std::vector<subword::MergeSetting> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t comma = text.find(',', start);
    if (comma == std::string_view::npos) comma = text.size();
    auto item = text.substr(start, comma - start);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (item.empty()) fail(ErrorCode::Config, "sweep: empty merge setting in \"" + std::string(text) + "\"");
    out.push_back(subword::MergeSetting::parse(item));
    start = comma + 1;
  }
  return out;
}

std::optional<double> SweepCell::delta() const {
  if (!bleu_std || !bleu_cg) return std::nullopt;
  return *bleu_cg - *bleu_std;
}

double decode_and_score(const TrainedRun& run, const std::string& src_path, const std::string& ref_path, const fs::path& hyp_path,
                        const nmt::BeamOptions& options, bool lowercase, std::size_t threads) {
  const auto src = subword::read_lines(src_path);
  const auto ref = subword::read_lines(ref_path);
  if (src.size() != ref.size())
    fail(ErrorCode::Format, "test set: " + std::to_string(src.size()) + " source lines vs " + std::to_string(ref.size()) + " references");
  const auto hyp = run.translate_all(src, options, threads);
  if (!hyp_path.empty()) {
    if (hyp_path.has_parent_path()) fs::create_directories(hyp_path.parent_path());
    subword::write_lines(hyp_path.string(), hyp);
  }
  return eval::bleu(hyp, ref, lowercase);
}

std::vector<SweepCell> run_sweep(const SweepSpec& spec, const SweepCorpora& corpora, const fs::path& out_dir,
                                 std::function<void(const std::string&)> log) {
  spec.validate();
  std::vector<SweepCell> cells;
  for (const auto& setting : spec.settings) {
    SweepCell cell{setting, {}, {}, {}};
    try {
      for (auto mode : {charemb::EmbedMode::Std, charemb::EmbedMode::CG}) {
        auto config = spec.base;
        config.bpe_merges = setting;
        config.mode = mode;
        const auto dir = out_dir / (setting.str() + "-" + charemb::mode_name(mode));
        if (log) log("setting " + setting.str() + " mode " + charemb::mode_name(mode) + ": preparing");
        prepare(config, corpora.train_valid, dir);
        if (log) log("setting " + setting.str() + " mode " + charemb::mode_name(mode) + ": training");
        train(config, dir);
        TrainedRun trained(dir);
        const double score = decode_and_score(trained, corpora.test_src, corpora.test_tgt, RunLayout{dir}.hyps() / "test.hyp",
                                              config.beam_options(), config.lowercase, thread_limit());
        (mode == charemb::EmbedMode::Std ? cell.bleu_std : cell.bleu_cg) = score;
        if (log) {
          char buf[32];
          std::snprintf(buf, sizeof buf, "%.2f", score);
          log("setting " + setting.str() + " mode " + charemb::mode_name(mode) + ": BLEU " + buf);
        }
      }
    } catch (const std::exception& e) {
      cell.error = e.what();
      if (log) log("setting " + setting.str() + " failed: " + cell.error);
    }
    cells.push_back(std::move(cell));
  }
  fs::create_directories(out_dir);
  subword::write_file((out_dir / "sweep.tsv").string(), sweep_table(cells));
  subword::write_file((out_dir / "sweep_plot.dat").string(), sweep_plot_data(cells));
  return cells;
}

namespace {

std::string cell_text(const std::optional<double>& v) {
  if (!v) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", *v);
  return buf;
}

}  // namespace

std::string sweep_table(const std::vector<SweepCell>& cells) {
  std::string out = "setting\tbleu_std\tbleu_cg\tdelta\n";
  for (const auto& c : cells) {
    // Delta from the printed cells.
    std::optional<double> d;
    if (c.bleu_std && c.bleu_cg) d = std::stod(cell_text(c.bleu_cg)) - std::stod(cell_text(c.bleu_std));
    out += c.setting.str() + "\t" + cell_text(c.bleu_std) + "\t" + cell_text(c.bleu_cg) + "\t" + cell_text(d) + "\n";
  }
  return out;
}

std::string sweep_plot_data(const std::vector<SweepCell>& cells) {
  std::string out = "# index\tmerges\tdelta\n";
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto d = cells[i].delta();
    if (!d) continue;
    out += std::to_string(i) + "\t" + cells[i].setting.str() + "\t" + cell_text(d) + "\n";
  }
  return out;
}

}  // namespace cgnmt::pipeline
