// SPDX-License-Identifier: Apache-2.0
// Command-line front end over the cgnmt C API.
#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cgnmt/cgnmt.h"

namespace fs = std::filesystem;

namespace {

struct Failure : std::runtime_error {
  cgnmt_status status;
  Failure(cgnmt_status s, const std::string& m) : std::runtime_error(m), status(s) {}
};

void check(cgnmt_status s) {
  if (s != CGNMT_OK) throw Failure(s, cgnmt_last_error());
}

std::string take(char* s) {
  std::string out = s ? s : "";
  cgnmt_string_free(s);
  return out;
}

std::string utc_stamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct ConfigHandle {
  cgnmt_config* ptr = nullptr;
  ConfigHandle() = default;
  ConfigHandle(const ConfigHandle&) = delete;
  ConfigHandle& operator=(const ConfigHandle&) = delete;
  ~ConfigHandle() { cgnmt_config_free(ptr); }
  std::string get(const char* key) const {
    char* v = nullptr;
    check(cgnmt_config_get(ptr, key, &v));
    return take(v);
  }
};

// Flags shared by every command that resolves a configuration.
struct ConfigFlags {
  std::string config_path;
  std::optional<std::string> mode, side, merges, batch, beam, sample, splits, seed, lowercase;
  std::vector<std::string> sets;

  void attach(CLI::App* cmd, bool training) {
    cmd->add_option("--config", config_path, "key = value configuration file");
    if (training) {
      cmd->add_option("--mode", mode, "std, c or cg");
      cmd->add_option("--side-override", side, "input-only, softmax-only or both");
      cmd->add_option("--bpe-merges", merges, "merge count or 'word'");
      cmd->add_option("--batch-size", batch);
      cmd->add_option("--sample-size", sample, "sampled softmax support, 0 for full");
      cmd->add_option("--seed", seed);
    }
    cmd->add_option("--beam", beam);
    cmd->add_option("--splits", splits, "vocabulary splits for the output layer");
    cmd->add_option("--lowercase", lowercase, "case-insensitive scoring");
    cmd->add_option("--set", sets, "extra key=value override, repeatable");
  }

  // File from --config, else `fallback` when it exists, else defaults; flags override.
  void resolve(ConfigHandle& out, const fs::path& fallback = {}) const {
    if (!config_path.empty())
      check(cgnmt_config_load(config_path.c_str(), &out.ptr));
    else if (!fallback.empty() && fs::exists(fallback))
      check(cgnmt_config_load(fallback.c_str(), &out.ptr));
    else
      check(cgnmt_config_new(&out.ptr));
    const std::pair<const char*, const std::optional<std::string>*> flags[] = {
        {"mode", &mode},     {"side_override", &side}, {"bpe_merges", &merges}, {"batch_size", &batch}, {"beam", &beam},
        {"sample_size", &sample}, {"splits", &splits}, {"seed", &seed},         {"lowercase", &lowercase}};
    for (const auto& [key, value] : flags)
      if (*value) check(cgnmt_config_set(out.ptr, key, (*value)->c_str()));
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw Failure(CGNMT_ERR_CONFIG, "--set expects key=value, got '" + kv + "'");
      check(cgnmt_config_set(out.ptr, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str()));
    }
    check(cgnmt_config_validate(out.ptr));
  }
};

struct Record {
  std::string command;
  const cgnmt_config* config = nullptr;
  std::vector<std::string> inputs, outputs;
  fs::path manifest;
};

std::vector<std::string> files_under(const fs::path& dir) {
  std::vector<std::string> out;
  if (!fs::exists(dir)) return out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out.push_back(e.path().string());
  std::sort(out.begin(), out.end());
  return out;
}

fs::path manifest_for(const std::string& flag, const std::string& output) {
  if (!flag.empty()) return flag;
  if (!output.empty()) return output + ".manifest.txt";
  return "cgnmt.manifest.txt";
}

void epoch_line(size_t epoch, double lr, double loss, size_t tokens, double acc, void*) {
  std::printf("%zu\t%.6g\t%.6f\t%zu\t%.6f\n", epoch, lr, loss, tokens, acc);
  std::fflush(stdout);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Character-gated neural machine translation toolkit"};
  app.require_subcommand(1);
  std::string manifest_flag;
  app.add_option("--manifest", manifest_flag, "manifest file for commands without a run directory");

  std::string input, output, codes, run_dir, checkpoint, hyp, ref, corpus, alignments, forward, backward, unimorph, table,
      settings, train_src, train_tgt, valid_src, valid_tgt, test_src, test_tgt;
  std::string merges_arg;
  double lambda = 0.05;
  bool segmented = false;
  ConfigFlags prepare_flags, train_flags, translate_flags, score_flags, sweep_flags;

  auto* bpe_learn = app.add_subcommand("bpe-learn", "learn BPE merges from a text file");
  bpe_learn->add_option("--input", input)->required();
  bpe_learn->add_option("--bpe-merges", merges_arg)->required();
  bpe_learn->add_option("--output", output, "merge list file")->required();

  auto* bpe_apply = app.add_subcommand("bpe-apply", "segment a text file with learned merges");
  bpe_apply->add_option("--codes", codes)->required();
  bpe_apply->add_option("--input", input)->required();
  bpe_apply->add_option("--output", output)->required();

  auto* prepare = app.add_subcommand("prepare", "filter corpora, learn BPE and build vocabularies for a run");
  prepare->add_option("--run", run_dir)->required();
  prepare->add_option("--train-src", train_src)->required();
  prepare->add_option("--train-tgt", train_tgt)->required();
  prepare->add_option("--valid-src", valid_src)->required();
  prepare->add_option("--valid-tgt", valid_tgt)->required();
  prepare_flags.attach(prepare, true);

  auto* train = app.add_subcommand("train", "train a prepared run, resuming from its newest checkpoint");
  train->add_option("--run", run_dir)->required();
  train_flags.attach(train, true);

  auto* translate = app.add_subcommand("translate", "decode a source file with a trained run");
  translate->add_option("--run", run_dir)->required();
  translate->add_option("--input", input)->required();
  translate->add_option("--output", output, "defaults to <run>/hyps/<input name>.hyp");
  translate->add_option("--checkpoint", checkpoint, "defaults to the best checkpoint");
  translate->add_flag("--segmented", segmented, "input already carries the run's source BPE");
  translate_flags.attach(translate, false);

  auto* score = app.add_subcommand("score", "corpus BLEU of a hypothesis file");
  score->add_option("--hyp", hyp)->required();
  score->add_option("--ref", ref)->required();
  score_flags.attach(score, false);

  auto* analyze = app.add_subcommand("analyze", "corpus, alignment and morphology features");
  analyze->add_option("--corpus", corpus, "tokenized text for TT and H");
  analyze->add_option("--alignments", alignments, "symmetrized Pharaoh alignments for A");
  analyze->add_option("--forward", forward, "forward Pharaoh alignments, symmetrized with --backward");
  analyze->add_option("--backward", backward);
  analyze->add_option("--unimorph", unimorph, "UniMorph lexicon for UT and UTC");
  analyze->add_option("--output", output, "also write the features as TSV");

  auto* regress = app.add_subcommand("regress", "feature-augmented ridge regression of BLEU gains");
  regress->add_option("--table", table)->required();
  regress->add_option("--lambda", lambda);
  regress->add_option("--output", output, "weights TSV, stdout when absent");

  auto* sweep = app.add_subcommand("sweep", "train Std and CG at each BPE merge setting");
  sweep->add_option("--settings", settings, "comma-separated merge settings, e.g. 0,1600,word")->required();
  sweep->add_option("--train-src", train_src)->required();
  sweep->add_option("--train-tgt", train_tgt)->required();
  sweep->add_option("--valid-src", valid_src)->required();
  sweep->add_option("--valid-tgt", valid_tgt)->required();
  sweep->add_option("--test-src", test_src)->required();
  sweep->add_option("--test-tgt", test_tgt)->required();
  sweep->add_option("--out", run_dir, "output directory")->required();
  sweep_flags.attach(sweep, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::string what = e.what();
    for (char& c : what)
      if (c == '\n') c = ' ';
    std::fprintf(stderr, "usage error: %s\n", what.c_str());
    return 2;
  }

  const auto t0 = std::chrono::steady_clock::now();
  const std::string started = utc_stamp();
  ConfigHandle config;
  Record rec;
  try {
    if (*bpe_learn) {
      rec.command = "bpe-learn";
      if (merges_arg.empty() || merges_arg.find_first_not_of("0123456789") != std::string::npos)
        throw Failure(CGNMT_ERR_INVALID_ARGUMENT, "bpe-learn needs a numeric merge count, got '" + merges_arg + "'");
      cgnmt_bpe* bpe = nullptr;
      check(cgnmt_bpe_learn(input.c_str(), std::stoull(merges_arg), &bpe));
      const cgnmt_status s = cgnmt_bpe_save(bpe, output.c_str());
      const size_t n = cgnmt_bpe_size(bpe);
      cgnmt_bpe_free(bpe);
      check(s);
      std::printf("merges\n%zu\n", n);
      rec.inputs = {input};
      rec.outputs = {output};
      rec.manifest = manifest_for(manifest_flag, output);
    } else if (*bpe_apply) {
      rec.command = "bpe-apply";
      cgnmt_bpe* bpe = nullptr;
      check(cgnmt_bpe_load(codes.c_str(), &bpe));
      const cgnmt_status s = cgnmt_bpe_apply_file(bpe, input.c_str(), output.c_str());
      cgnmt_bpe_free(bpe);
      check(s);
      rec.inputs = {codes, input};
      rec.outputs = {output};
      rec.manifest = manifest_for(manifest_flag, output);
    } else if (*prepare) {
      rec.command = "prepare";
      prepare_flags.resolve(config);
      check(cgnmt_prepare(config.ptr, run_dir.c_str(), train_src.c_str(), train_tgt.c_str(), valid_src.c_str(), valid_tgt.c_str()));
      rec.inputs = {train_src, train_tgt, valid_src, valid_tgt};
      if (!prepare_flags.config_path.empty()) rec.inputs.push_back(prepare_flags.config_path);
      rec.outputs = files_under(fs::path(run_dir) / "data");
      rec.outputs.push_back((fs::path(run_dir) / "config.txt").string());
      rec.manifest = fs::path(run_dir) / "manifest.txt";
    } else if (*train) {
      rec.command = "train";
      train_flags.resolve(config, fs::path(run_dir) / "config.txt");
      std::printf("epoch\tlearning_rate\ttrain_loss\ttrain_tokens\tvalid_accuracy\n");
      char* best = nullptr;
      check(cgnmt_train(config.ptr, run_dir.c_str(), epoch_line, nullptr, &best));
      std::fprintf(stderr, "best checkpoint: %s\n", take(best).c_str());
      rec.inputs = files_under(fs::path(run_dir) / "data");
      rec.outputs = files_under(fs::path(run_dir) / "checkpoints");
      rec.manifest = fs::path(run_dir) / "manifest.txt";
    } else if (*translate) {
      rec.command = "translate";
      translate_flags.resolve(config, fs::path(run_dir) / "config.txt");
      if (output.empty()) {
        fs::create_directories(fs::path(run_dir) / "hyps");
        output = (fs::path(run_dir) / "hyps" / (fs::path(input).filename().string() + ".hyp")).string();
      }
      cgnmt_translator* t = nullptr;
      check(cgnmt_translator_open(run_dir.c_str(), checkpoint.empty() ? nullptr : checkpoint.c_str(), &t));
      cgnmt_status s = cgnmt_translator_set_beam(t, std::stoull(config.get("beam")), std::stoull(config.get("max_decode_len")),
                                                 std::stoull(config.get("splits")), config.get("normalize_length") == "true");
      if (s == CGNMT_OK) s = cgnmt_translator_set_segmented_input(t, segmented);
      if (s == CGNMT_OK) s = cgnmt_translate_file(t, input.c_str(), output.c_str(), 0);
      cgnmt_translator_free(t);
      check(s);
      rec.inputs = {input};
      if (!checkpoint.empty()) rec.inputs.push_back(checkpoint);
      rec.outputs = {output};
      rec.manifest = fs::path(run_dir) / "manifest.txt";
    } else if (*score) {
      rec.command = "score";
      score_flags.resolve(config);
      double value = 0;
      check(cgnmt_bleu_files(hyp.c_str(), ref.c_str(), config.get("lowercase") == "true", &value));
      std::printf("%.2f\n", value);
      rec.inputs = {hyp, ref};
      rec.manifest = manifest_for(manifest_flag, "");
    } else if (*analyze) {
      rec.command = "analyze";
      auto opt = [](const std::string& s) { return s.empty() ? nullptr : s.c_str(); };
      char* report = nullptr;
      check(cgnmt_analyze(opt(corpus), opt(alignments), opt(forward), opt(backward), opt(unimorph), &report));
      const std::string text = take(report);
      std::fputs(text.c_str(), stdout);
      if (!output.empty()) {
        std::string tsv = "feature\tvalue\n";
        for (size_t pos = 0; pos < text.size();) {
          const size_t end = text.find('\n', pos);
          const std::string line = text.substr(pos, end - pos);
          const size_t eq = line.find(" = ");
          tsv += line.substr(0, eq) + "\t" + line.substr(eq + 3) + "\n";
          pos = end + 1;
        }
        std::FILE* f = std::fopen(output.c_str(), "wb");
        if (!f) throw Failure(CGNMT_ERR_IO, "cannot write '" + output + "'");
        std::fputs(tsv.c_str(), f);
        std::fclose(f);
        rec.outputs = {output};
      }
      for (const auto* p : {&corpus, &alignments, &forward, &backward, &unimorph})
        if (!p->empty()) rec.inputs.push_back(*p);
      rec.manifest = manifest_for(manifest_flag, output);
    } else if (*regress) {
      rec.command = "regress";
      char* weights = nullptr;
      check(cgnmt_regress(table.c_str(), lambda, &weights));
      const std::string text = take(weights);
      if (output.empty()) {
        std::fputs(text.c_str(), stdout);
      } else {
        std::FILE* f = std::fopen(output.c_str(), "wb");
        if (!f) throw Failure(CGNMT_ERR_IO, "cannot write '" + output + "'");
        std::fputs(text.c_str(), f);
        std::fclose(f);
        rec.outputs = {output};
      }
      rec.inputs = {table};
      rec.manifest = manifest_for(manifest_flag, output);
    } else if (*sweep) {
      rec.command = "sweep";
      sweep_flags.resolve(config);
      char* result = nullptr;
      check(cgnmt_sweep(config.ptr, settings.c_str(), train_src.c_str(), train_tgt.c_str(), valid_src.c_str(), valid_tgt.c_str(),
                        test_src.c_str(), test_tgt.c_str(), run_dir.c_str(), &result));
      std::fputs(take(result).c_str(), stdout);
      rec.inputs = {train_src, train_tgt, valid_src, valid_tgt, test_src, test_tgt};
      rec.outputs = {(fs::path(run_dir) / "sweep.tsv").string(), (fs::path(run_dir) / "sweep_plot.dat").string()};
      rec.manifest = fs::path(run_dir) / "manifest.txt";
    }

    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::vector<const char*> args(argv, argv + argc), ins, outs;
    for (const auto& s : rec.inputs) ins.push_back(s.c_str());
    for (const auto& s : rec.outputs) outs.push_back(s.c_str());
    check(cgnmt_manifest_append(rec.manifest.c_str(), rec.command.c_str(), args.data(), args.size(), config.ptr, ins.data(), ins.size(),
                                outs.data(), outs.size(), started.c_str(), wall));
    return 0;
  } catch (const Failure& e) {
    std::string what = e.what();
    for (char& c : what)
      if (c == '\n') c = ' ';
    std::fprintf(stderr, "error: code=%s message=%s\n", cgnmt_status_name(e.status), what.c_str());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: code=internal message=%s\n", e.what());
    return 1;
  }
}
