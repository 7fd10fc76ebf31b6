// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <set>
#include <unistd.h>

#include "nmt/translator.hpp"
#include "subword/text.hpp"
#include "tensor/errors.hpp"
#include "tensor/ops.hpp"
#include "toy.hpp"
#include "training/trainer.hpp"

using namespace cgnmt;
using namespace cgnmt::training;
namespace fs = std::filesystem;

namespace {

std::string words(std::size_t n) {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s += (i ? " w" : "w") + std::to_string(i);
  return s;
}

fs::path scratch_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("cgnmt_training_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  return dir;
}

struct Fixture {
  testing::ToyVocab vocab = testing::toy_vocab({"a", "b", "c", "d", "e"}, {"xa", "xb", "yc", "yd", "ze"});
  Corpus corpus;
  Corpus valid;
  Fixture() {
    std::mt19937 rng(3);
    for (int s = 0; s < 12; ++s) {
      std::vector<int> src, tgt;
      const int n = 1 + int(rng() % 4);
      for (int k = 0; k < n; ++k) {
        const int w = int(rng() % 5);
        src.push_back(4 + w);
        tgt.push_back(4 + (w + 1) % 5);
      }
      (s < 9 ? corpus : valid).src.push_back(src);
      (s < 9 ? corpus : valid).tgt.push_back(tgt);
    }
  }
};

TrainConfig tiny_config(charemb::EmbedMode mode, std::size_t epochs) {
  TrainConfig c;
  c.mode = mode;
  c.embed_dim = c.hidden_dim = c.encoder_dim = 8;
  c.char_dim = 5;
  c.layers = 1;
  c.batch_size = 4;
  c.max_epochs = epochs;
  c.init_scale = 0.3;
  c.seed = 11;
  return c;
}

template <typename Real>
std::unique_ptr<nmt::Model<Real>> model_for(const Fixture& f, const TrainConfig& c) {
  return std::make_unique<nmt::Model<Real>>(c.model_config(), f.vocab.src.size(), f.vocab.spellings, f.vocab.chars.size(), c.seed);
}

template <typename Real>
double corpus_loss(const nmt::Model<Real>& m, const Corpus& corpus) {
  Tape<Real> tape(false);
  nmt::Batch all{corpus.src, corpus.tgt};
  return double(m.loss(tape, all, nullptr).value().item());
}

}  // namespace

TEST_CASE("filter_corpus boundary and empty pairs") {
  const std::vector<std::string> src{words(50), words(51), "", "a b", "   "};
  const std::vector<std::string> tgt{"t", "t", "t", "", "t"};
  FilterStats stats;
  const auto out = filter_corpus(src, tgt, 50, &stats);
  REQUIRE(out.size() == 1);
  CHECK(out.src[0] == words(50));
  CHECK(stats.kept == 1);
  CHECK(stats.dropped_long == 1);
  CHECK(stats.dropped_empty == 3);
}

TEST_CASE("filter_corpus survivors equal a length scan") {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::string> src, tgt;
    std::size_t expect = 0;
    for (int i = 0; i < 200; ++i) {
      const std::size_t ns = rng() % 60, nt = rng() % 5;
      src.push_back(words(ns));
      tgt.push_back(words(nt));
      if (ns >= 1 && ns <= 50 && nt >= 1) ++expect;
    }
    CHECK(filter_corpus(src, tgt).size() == expect);
  }
}

TEST_CASE("filter_corpus rejects misaligned files with line numbers") {
  try {
    filter_corpus({"a", "b", "c"}, {"x", "y"});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Format);
    const std::string what = e.what();
    CHECK(what.find("3 lines") != std::string::npos);
    CHECK(what.find("2 lines") != std::string::npos);
    CHECK(what.find("line 3") != std::string::npos);
  }
}

TEST_CASE("learning-rate schedule") {
  TrainConfig c;
  for (std::size_t e = 1; e <= 8; ++e) CHECK(lr_at_epoch(c, e) == 1.0);
  CHECK(lr_at_epoch(c, 9) == 0.5);
  CHECK(lr_at_epoch(c, 12) == 0.0625);
  CHECK(lr_at_epoch(c, 30) == 0.001);
  CHECK_THROWS_AS(lr_at_epoch(c, 0), Error);

  std::mt19937 rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    TrainConfig r;
    r.initial_lr = 0.1 + double(rng() % 100) / 50;
    r.min_lr = r.initial_lr * double(1 + rng() % 100) / 1000;
    r.decay = 0.1 + double(rng() % 90) / 100;
    r.decay_start_epoch = 1 + rng() % 20;
    double prev = r.initial_lr;
    for (std::size_t e = 1; e <= 80; ++e) {
      const double lr = lr_at_epoch(r, e);
      CHECK(lr <= prev);
      CHECK(lr >= r.min_lr);
      prev = lr;
    }
  }
}

TEST_CASE("config text parsing and invariants") {
  const auto c = TrainConfig::from_text(
      "# run\nmode = std   # baseline\nside_override = softmax-only\nbpe_merges = 3200\n\nbatch_size=16\nmin_lr = 0.01\nseed = 9\n");
  CHECK(c.mode == charemb::EmbedMode::Std);
  CHECK(c.side == charemb::SideOverride::SoftmaxOnly);
  CHECK(c.bpe_merges == subword::MergeSetting::count(3200));
  CHECK(c.batch_size == 16);
  CHECK(c.min_lr == 0.01);
  CHECK(c.seed == 9);
  CHECK(c.initial_lr == 1.0);
  CHECK(c.decay == 0.5);
  CHECK(c.decay_start_epoch == 9);

  const auto round = TrainConfig::from_text(c.to_text());
  CHECK(round.to_text() == c.to_text());
  CHECK(round.digest() == c.digest());

  auto code_of = [](const std::string& text) {
    try {
      TrainConfig::from_text(text).validate();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::State;
  };
  CHECK(code_of("batch_size = 0") == ErrorCode::Config);
  CHECK(code_of("min_lr = 2") == ErrorCode::Config);
  CHECK(code_of("min_lr = 0") == ErrorCode::Config);
  CHECK(code_of("colour = blue") == ErrorCode::Config);
  CHECK(code_of("batch_size = many") == ErrorCode::Config);
  CHECK(code_of("just words") == ErrorCode::Config);
  CHECK(code_of("mode = fancy") == ErrorCode::Config);

  TrainConfig a, b;
  b.max_epochs = a.max_epochs + 5;
  b.beam = 12;
  CHECK(a.digest() == b.digest());
  b.seed = a.seed + 1;
  CHECK(a.digest() != b.digest());
}

TEST_CASE("make_batches sizes, coverage and determinism") {
  Corpus corpus;
  for (int i = 0; i < 100; ++i) {
    corpus.src.push_back({4 + i});
    corpus.tgt.push_back({i});
  }
  const auto batches = make_batches(corpus, 80, 7, 1);
  REQUIRE(batches.size() == 2);
  CHECK(batches[0].size() == 80);
  CHECK(batches[1].size() == 20);
  std::multiset<int> seen;
  for (const auto& b : batches)
    for (std::size_t k = 0; k < b.size(); ++k) {
      CHECK(b.src[k][0] == b.tgt[k][0] + 4);
      seen.insert(b.tgt[k][0]);
    }
  CHECK(seen.size() == 100);
  CHECK(std::set<int>(seen.begin(), seen.end()).size() == 100);

  const auto again = make_batches(corpus, 80, 7, 1);
  CHECK(again[0].tgt == batches[0].tgt);
  CHECK(make_batches(corpus, 80, 7, 2)[0].tgt != batches[0].tgt);
  CHECK(make_batches(corpus, 80, 8, 1)[0].tgt != batches[0].tgt);
}

TEST_CASE("batch loss equals the sum of unbatched sentence losses") {
  Fixture f;
  const auto c = tiny_config(charemb::EmbedMode::CG, 1);
  auto m = model_for<double>(f, c);
  for (const auto& batch : make_batches(f.corpus, 4, 3, 1)) {
    Tape<double> tape(false);
    const double batched = m->loss(tape, batch, nullptr).value().item();
    double parts = 0;
    for (std::size_t k = 0; k < batch.size(); ++k) {
      Tape<double> t(false);
      parts += m->loss(t, nmt::Batch{{batch.src[k]}, {batch.tgt[k]}}, nullptr).value().item();
    }
    CHECK(batched == doctest::Approx(parts).epsilon(1e-9));
    CHECK(std::abs(batched - parts) < 1e-5);

    Tape<double> padded(false);
    const double extra = m->loss(padded, batch, nullptr, 9).value().item();
    CHECK(std::abs(extra - batched) < 1e-9);
  }
}

TEST_CASE("one epoch on a two-sentence corpus lowers the training loss") {
  Fixture f;
  Corpus two;
  two.src = {f.corpus.src[0], f.corpus.src[1]};
  two.tgt = {f.corpus.tgt[0], f.corpus.tgt[1]};
  for (auto mode : {charemb::EmbedMode::Std, charemb::EmbedMode::C, charemb::EmbedMode::CG}) {
    auto c = tiny_config(mode, 1);
    c.initial_lr = 0.5;
    auto m = model_for<float>(f, c);
    const double before = corpus_loss(*m, two);
    Trainer<float> trainer(c, *m, two, Corpus{});
    const auto rec = trainer.train_epoch();
    CHECK(rec.epoch == 1);
    CHECK(rec.train_tokens == two.tgt[0].size() + two.tgt[1].size() + 2);
    CHECK(corpus_loss(*m, two) < before);
  }
}

TEST_CASE("a CG run moves the gate parameters") {
  Fixture f;
  const auto c = tiny_config(charemb::EmbedMode::CG, 1);
  auto m = model_for<float>(f, c);
  const auto gate_before = m->params().get("gate").value;
  Trainer<float> trainer(c, *m, f.corpus, f.valid);
  trainer.train_epoch();
  const auto& gate_after = m->params().get("gate").value;
  double delta = 0;
  for (std::size_t i = 0; i < gate_after.size(); ++i) delta += std::abs(gate_after[i] - gate_before[i]);
  CHECK(delta > 0);
}

TEST_CASE("sampled softmax and gate dropout training stay finite and deterministic") {
  Fixture f;
  auto c = tiny_config(charemb::EmbedMode::CG, 2);
  c.sample_size = 3;
  c.gate_dropout = 0.2;
  auto run = [&] {
    auto m = model_for<float>(f, c);
    Trainer<float> trainer(c, *m, f.corpus, f.valid);
    return trainer.run();
  };
  const auto a = run(), b = run();
  REQUIRE(a.size() == 2);
  for (std::size_t e = 0; e < 2; ++e) {
    CHECK(std::isfinite(a[e].train_loss));
    CHECK(a[e].train_loss == b[e].train_loss);
  }
}

TEST_CASE("divergence aborts with a numeric error") {
  Fixture f;
  const auto c = tiny_config(charemb::EmbedMode::Std, 1);
  auto m = model_for<float>(f, c);
  m->params().get("att.wc").value.fill(std::nanf(""));
  Trainer<float> trainer(c, *m, f.corpus, f.valid);
  try {
    trainer.train_epoch();
    FAIL("expected divergence");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Numeric);
    CHECK(std::string(e.what()).find("epoch 1") != std::string::npos);
  }
}

TEST_CASE("select_model picks the best accuracy and the earliest tie") {
  auto infos = [](std::vector<double> acc) {
    std::vector<CheckpointInfo> out;
    for (std::size_t i = 0; i < acc.size(); ++i) out.push_back({i + 1, acc[i], 0, "", checkpoint_name(i + 1)});
    return out;
  };
  CHECK(select_model(infos({0.1, 0.3, 0.2})).epoch == 2);
  CHECK(select_model(infos({0.3, 0.3})).epoch == 1);
  CHECK(select_model(infos({0.2, 0.5, 0.5, 0.1})).epoch == 2);
  CHECK_THROWS_AS(select_model({}), Error);
  CHECK(checkpoint_name(7) == "epoch007.ckpt");
}

TEST_CASE("checkpoints are byte-identical across runs and resume matches an uninterrupted run") {
  Fixture f;
  const auto c4 = tiny_config(charemb::EmbedMode::CG, 4);
  const auto full = scratch_dir("full"), again = scratch_dir("again"), split = scratch_dir("split");

  auto run_to = [&](const TrainConfig& c, const fs::path& dir, bool resume) {
    auto m = model_for<float>(f, c);
    Trainer<float> trainer(c, *m, f.corpus, f.valid, dir);
    if (resume) CHECK(trainer.resume());
    return trainer.run();
  };
  const auto a = run_to(c4, full, false);
  run_to(c4, again, false);
  auto c2 = c4;
  c2.max_epochs = 2;
  run_to(c2, split, false);
  const auto resumed = run_to(c4, split, true);

  REQUIRE(a.size() == 4);
  REQUIRE(resumed.size() == 4);
  for (std::size_t e = 1; e <= 4; ++e) {
    const auto name = checkpoint_name(e);
    const auto bytes = subword::read_file((full / name).string());
    CHECK(bytes == subword::read_file((again / name).string()));
    CHECK(bytes == subword::read_file((split / name).string()));
    CHECK(a[e - 1].train_loss == resumed[e - 1].train_loss);
    CHECK(a[e - 1].valid_accuracy == resumed[e - 1].valid_accuracy);
  }

  const auto listed = list_checkpoints(full);
  REQUIRE(listed.size() == 4);
  CHECK(read_best_marker(full) == select_model(listed).path);
  CHECK(listed[2].config_digest == c4.digest());

  auto other = c4;
  other.seed = 99;
  auto m = model_for<float>(f, other);
  Trainer<float> mismatched(other, *m, f.corpus, f.valid, full);
  CHECK_THROWS_AS(mismatched.resume(), Error);

  for (const auto& d : {full, again, split}) fs::remove_all(d);
}

TEST_CASE("stored validation accuracy equals an independent re-evaluation") {
  Fixture f;
  const auto c = tiny_config(charemb::EmbedMode::CG, 3);
  const auto dir = scratch_dir("acc");
  {
    auto m = model_for<float>(f, c);
    Trainer<float> trainer(c, *m, f.corpus, f.valid, dir);
    trainer.run();
  }
  for (const auto& info : list_checkpoints(dir)) {
    auto m = model_for<float>(f, c);
    load_checkpoint(info, m->params(), c.digest());
    nmt::Translator<float> translator(*m);
    std::size_t correct = 0, total = 0;
    for (std::size_t s = 0; s < f.valid.size(); ++s) {
      auto expected = f.valid.tgt[s];
      expected.push_back(subword::kEos);
      std::vector<int> prefix(f.valid.tgt[s]);
      const auto rows = translator.prefix_log_probs(f.valid.src[s], prefix);
      REQUIRE(rows.size() == expected.size());
      for (std::size_t j = 0; j < rows.size(); ++j) {
        // The decoding distribution masks PAD and BOS, which are never targets.
        const auto best = std::max_element(rows[j].begin(), rows[j].end()) - rows[j].begin();
        correct += best == expected[j];
        ++total;
      }
    }
    CHECK(info.valid_accuracy == doctest::Approx(double(correct) / double(total)).epsilon(1e-12));
  }
  fs::remove_all(dir);
}
