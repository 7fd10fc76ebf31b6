// SPDX-License-Identifier: Apache-2.0
#include "pipeline/run.hpp"

#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

#include "subword/text.hpp"
#include "tensor/errors.hpp"

namespace cgnmt::pipeline {

namespace {

std::vector<std::vector<std::string>> tokenize(const std::vector<std::string>& lines) {
  std::vector<std::vector<std::string>> out;
  out.reserve(lines.size());
  for (const auto& l : lines) out.push_back(subword::split_ws(l));
  return out;
}

std::vector<std::string> segment(const std::optional<subword::BpeModel>& bpe, const std::vector<std::string>& lines) {
  if (!bpe) {
    std::vector<std::string> out;
    out.reserve(lines.size());
    for (const auto& l : lines) out.push_back(subword::join(subword::split_ws(l)));
    return out;
  }
  auto out = bpe->apply_lines(lines);
  for (auto& l : out) l = subword::join(subword::split_ws(l));
  return out;
}

void check_prepared_keys(const training::TrainConfig& prepared, const training::TrainConfig& config) {
  const auto a = prepared.to_map(), b = config.to_map();
  for (const char* key : {"bpe_merges", "vocab_size", "target_lexicon", "max_source_len"})
    if (a.at(key) != b.at(key))
      fail(ErrorCode::Config, std::string("run was prepared with ") + key + " = " + a.at(key) + ", got " + b.at(key));
}

}  // namespace

void RunLayout::create() const {
  for (const auto& d : {root, data(), checkpoints(), hyps(), reports()}) {
    std::error_code ec;
    fs::create_directories(d, ec);
    if (ec) fail(ErrorCode::Io, "cannot create " + d.string() + ": " + ec.message());
  }
}

std::vector<std::string> Preprocessing::segment_source(const std::vector<std::string>& lines) const { return segment(src_bpe, lines); }
std::vector<std::string> Preprocessing::segment_target(const std::vector<std::string>& lines) const { return segment(tgt_bpe, lines); }

training::Corpus Preprocessing::numericalize(const std::vector<std::string>& src, const std::vector<std::string>& tgt) const {
  if (src.size() != tgt.size()) fail(ErrorCode::Dimension, "numericalize: sides differ in length");
  training::Corpus c;
  for (std::size_t i = 0; i < src.size(); ++i) {
    c.src.push_back(src_vocab.encode(subword::split_ws(src[i])));
    c.tgt.push_back(tgt_vocab.encode(subword::split_ws(tgt[i])));
  }
  return c;
}

PrepareReport prepare(const training::TrainConfig& config, const ParallelFiles& files, const fs::path& run_dir) {
  config.validate();
  const RunLayout run{run_dir};
  run.create();
  PrepareReport report;
  auto train = training::filter_corpus(subword::read_lines(files.train_src), subword::read_lines(files.train_tgt), config.max_source_len,
                                       &report.train);
  auto valid = training::filter_corpus(subword::read_lines(files.valid_src), subword::read_lines(files.valid_tgt), config.max_source_len,
                                       &report.valid);
  if (train.size() == 0) fail(ErrorCode::InvalidArgument, "no training pairs survive filtering");

  Preprocessing prep;
  auto write = [&](const fs::path& p, std::string_view text) {
    subword::write_file(p.string(), text);
    report.outputs.push_back(p);
  };
  if (!config.bpe_merges.word_level()) {
    const std::size_t n = *config.bpe_merges.merges;
    prep.src_bpe = subword::BpeModel::learn(subword::count_words(train.src), n);
    prep.tgt_bpe = subword::BpeModel::learn(subword::count_words(train.tgt), n);
    write(run.bpe("src"), prep.src_bpe->to_text());
    write(run.bpe("tgt"), prep.tgt_bpe->to_text());
  } else {
    for (const char* side : {"src", "tgt"}) fs::remove(run.bpe(side));
  }
  const auto train_src = prep.segment_source(train.src), train_tgt = prep.segment_target(train.tgt);
  const auto valid_src = prep.segment_source(valid.src), valid_tgt = prep.segment_target(valid.tgt);

  prep.src_vocab = subword::Vocabulary::build(tokenize(train_src), config.vocab_size);
  prep.tgt_vocab = subword::Vocabulary::build(tokenize(train_tgt), config.vocab_size);
  if (!config.target_lexicon.empty()) {
    const auto lexicon = subword::split_ws(subword::read_file(config.target_lexicon));
    std::vector<std::string> pieces;
    for (const auto& line : prep.segment_target(lexicon))
      for (auto& p : subword::split_ws(line)) pieces.push_back(std::move(p));
    prep.tgt_vocab = prep.tgt_vocab.extended(pieces);
  }
  write(run.vocab("src"), prep.src_vocab.to_text());
  write(run.vocab("tgt"), prep.tgt_vocab.to_text());
  auto lines = [](const std::vector<std::string>& v) {
    std::string s;
    for (const auto& l : v) s += l + "\n";
    return s;
  };
  write(run.text("train", "src"), lines(train_src));
  write(run.text("train", "tgt"), lines(train_tgt));
  write(run.text("valid", "src"), lines(valid_src));
  write(run.text("valid", "tgt"), lines(valid_tgt));
  write(run.config(), config.to_text());
  return report;
}

Preprocessing load_preprocessing(const RunLayout& run) {
  Preprocessing prep;
  if (fs::exists(run.bpe("src"))) prep.src_bpe = subword::BpeModel::from_text(subword::read_file(run.bpe("src").string()));
  if (fs::exists(run.bpe("tgt"))) prep.tgt_bpe = subword::BpeModel::from_text(subword::read_file(run.bpe("tgt").string()));
  prep.src_vocab = subword::Vocabulary::from_text(subword::read_file(run.vocab("src").string()));
  prep.tgt_vocab = subword::Vocabulary::from_text(subword::read_file(run.vocab("tgt").string()));
  prep.chars = subword::CharVocab::build(prep.tgt_vocab);
  return prep;
}

std::unique_ptr<nmt::Model<float>> build_model(const training::TrainConfig& config, const Preprocessing& prep) {
  return std::make_unique<nmt::Model<float>>(config.model_config(), prep.src_vocab.size(), subword::spellings(prep.tgt_vocab, prep.chars),
                                             prep.chars.size(), config.seed);
}

TrainReport train(const training::TrainConfig& config, const fs::path& run_dir, std::function<void(const training::EpochRecord&)> progress) {
  config.validate();
  const RunLayout run{run_dir};
  if (!fs::exists(run.config())) fail(ErrorCode::State, run_dir.string() + " has not been prepared");
  check_prepared_keys(training::TrainConfig::from_file(run.config().string()), config);
  const auto prep = load_preprocessing(run);
  auto model = build_model(config, prep);
  const auto train_corpus = prep.numericalize(subword::read_lines(run.text("train", "src").string()),
                                              subword::read_lines(run.text("train", "tgt").string()));
  const auto valid_corpus = prep.numericalize(subword::read_lines(run.text("valid", "src").string()),
                                              subword::read_lines(run.text("valid", "tgt").string()));
  training::Trainer<float> trainer(config, *model, train_corpus, valid_corpus, run.checkpoints());
  if (progress) trainer.on_epoch(std::move(progress));
  TrainReport report;
  report.resumed = trainer.resume();
  report.epochs = trainer.run();
  subword::write_file(run.config().string(), config.to_text());
  const auto found = training::list_checkpoints(run.checkpoints());
  if (found.empty()) fail(ErrorCode::State, "training produced no checkpoints");
  report.best = training::select_model(found);
  return report;
}

TrainedRun::TrainedRun(const fs::path& run_dir, const fs::path& checkpoint) {
  const RunLayout run{run_dir};
  config_ = training::TrainConfig::from_file(run.config().string());
  prep_ = load_preprocessing(run);
  model_ = build_model(config_, prep_);
  checkpoint_ = checkpoint.empty() ? training::read_best_marker(run.checkpoints()) : checkpoint;
  training::load_checkpoint(training::read_checkpoint_info(checkpoint_), model_->params(), config_.digest());
  translator_ = std::make_unique<nmt::Translator<float>>(*model_);
}

std::string TrainedRun::translate(const std::string& line, const nmt::BeamOptions& options, bool segmented) const {
  const auto src = prep_.src_vocab.encode(subword::split_ws(segmented ? line : prep_.segment_source({line}).front()));
  if (src.empty()) return {};
  const auto hyp = translator_->beam_search(src, options);
  const auto out = subword::join(prep_.tgt_vocab.decode(hyp.tokens));
  return prep_.tgt_bpe ? subword::undo_bpe(out) : out;
}

std::vector<std::string> TrainedRun::translate_all(const std::vector<std::string>& lines, const nmt::BeamOptions& options,
                                                   std::size_t threads, bool segmented) const {
  std::vector<std::string> out(lines.size());
  threads = std::max<std::size_t>(1, std::min(threads, lines.size()));
  if (threads == 1) {
    for (std::size_t i = 0; i < lines.size(); ++i) out[i] = translate(lines[i], options, segmented);
    return out;
  }
  std::exception_ptr error;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < threads; ++w)
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < lines.size(); i += threads) out[i] = translate(lines[i], options, segmented);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!error) error = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return out;
}

std::size_t thread_limit() {
  if (const char* env = std::getenv("CGNMT_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return std::size_t(v);
    fail(ErrorCode::Config, std::string("CGNMT_THREADS must be a positive integer, got \"") + env + "\"");
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace cgnmt::pipeline
