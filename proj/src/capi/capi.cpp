// SPDX-License-Identifier: Apache-2.0
#include "cgnmt/cgnmt.h"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <string>

#include "analysis/features.hpp"
#include "analysis/regression.hpp"
#include "eval/bleu.hpp"
#include "pipeline/manifest.hpp"
#include "pipeline/run.hpp"
#include "pipeline/sweep.hpp"
#include "subword/text.hpp"
#include "tensor/errors.hpp"
#include "training/digest.hpp"

struct cgnmt_config {
  cgnmt::training::TrainConfig value;
};

struct cgnmt_bpe {
  cgnmt::subword::BpeModel value;
};

struct cgnmt_translator {
  std::unique_ptr<cgnmt::pipeline::TrainedRun> run;
  cgnmt::nmt::BeamOptions options;
  bool segmented = false;
};

namespace {

thread_local std::string last_error;

cgnmt_status record(cgnmt_status status, const std::string& message) {
  last_error = message;
  return status;
}

template <typename F>
cgnmt_status guarded(F&& body) {
  try {
    last_error.clear();
    body();
    return CGNMT_OK;
  } catch (const cgnmt::Error& e) {
    return record(static_cast<cgnmt_status>(static_cast<int>(e.code())), e.what());
  } catch (const std::bad_alloc&) {
    return record(CGNMT_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return record(CGNMT_ERR_INTERNAL, e.what());
  } catch (...) {
    return record(CGNMT_ERR_INTERNAL, "unknown failure");
  }
}

void need(const void* p, const char* what) {
  if (!p) cgnmt::fail(cgnmt::ErrorCode::InvalidArgument, std::string(what) + " must not be NULL");
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::string fixed4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::vector<std::vector<std::string>> tokenized_lines(const char* path) {
  std::vector<std::vector<std::string>> out;
  for (const auto& l : cgnmt::subword::read_lines(path)) out.push_back(cgnmt::subword::split_ws(l));
  return out;
}

}  // namespace

extern "C" {

const char* cgnmt_version(void) { return "0.1.0"; }

const char* cgnmt_status_name(cgnmt_status status) {
  if (status == CGNMT_OK) return "ok";
  if (status == CGNMT_ERR_INTERNAL) return "internal";
  if (status >= CGNMT_ERR_INVALID_ARGUMENT && status <= CGNMT_ERR_STATE)
    return cgnmt::error_code_name(static_cast<cgnmt::ErrorCode>(static_cast<int>(status)));
  return "unknown";
}

const char* cgnmt_last_error(void) { return last_error.c_str(); }

void cgnmt_string_free(char* s) { std::free(s); }

cgnmt_status cgnmt_config_new(cgnmt_config** out) {
  return guarded([&] {
    need(out, "out");
    *out = new cgnmt_config{};
  });
}

cgnmt_status cgnmt_config_load(const char* path, cgnmt_config** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new cgnmt_config{cgnmt::training::TrainConfig::from_file(path)};
  });
}

cgnmt_status cgnmt_config_parse(const char* text, cgnmt_config** out) {
  return guarded([&] {
    need(text, "text");
    need(out, "out");
    *out = new cgnmt_config{cgnmt::training::TrainConfig::from_text(text)};
  });
}

cgnmt_status cgnmt_config_set(cgnmt_config* config, const char* key, const char* value) {
  return guarded([&] {
    need(config, "config");
    need(key, "key");
    need(value, "value");
    config->value.set(key, value);
  });
}

cgnmt_status cgnmt_config_get(const cgnmt_config* config, const char* key, char** value) {
  return guarded([&] {
    need(config, "config");
    need(key, "key");
    need(value, "value");
    const auto map = config->value.to_map();
    const auto it = map.find(key);
    if (it == map.end()) cgnmt::fail(cgnmt::ErrorCode::Config, std::string("unknown config key '") + key + "'");
    *value = dup(it->second);
  });
}

cgnmt_status cgnmt_config_validate(const cgnmt_config* config) {
  return guarded([&] {
    need(config, "config");
    config->value.validate();
  });
}

cgnmt_status cgnmt_config_to_text(const cgnmt_config* config, char** text) {
  return guarded([&] {
    need(config, "config");
    need(text, "text");
    *text = dup(config->value.to_text());
  });
}

cgnmt_status cgnmt_config_digest(const cgnmt_config* config, char** hex) {
  return guarded([&] {
    need(config, "config");
    need(hex, "hex");
    *hex = dup(config->value.digest());
  });
}

void cgnmt_config_free(cgnmt_config* config) { delete config; }

cgnmt_status cgnmt_bpe_learn(const char* corpus_path, size_t num_merges, cgnmt_bpe** out) {
  return guarded([&] {
    need(corpus_path, "corpus_path");
    need(out, "out");
    const auto words = cgnmt::subword::count_words(cgnmt::subword::read_lines(corpus_path));
    *out = new cgnmt_bpe{cgnmt::subword::BpeModel::learn(words, num_merges)};
  });
}

cgnmt_status cgnmt_bpe_load(const char* path, cgnmt_bpe** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new cgnmt_bpe{cgnmt::subword::BpeModel::from_text(cgnmt::subword::read_file(path))};
  });
}

cgnmt_status cgnmt_bpe_save(const cgnmt_bpe* bpe, const char* path) {
  return guarded([&] {
    need(bpe, "bpe");
    need(path, "path");
    cgnmt::subword::write_file(path, bpe->value.to_text());
  });
}

size_t cgnmt_bpe_size(const cgnmt_bpe* bpe) { return bpe ? bpe->value.size() : 0; }

cgnmt_status cgnmt_bpe_apply_line(const cgnmt_bpe* bpe, const char* line, char** out) {
  return guarded([&] {
    need(bpe, "bpe");
    need(line, "line");
    need(out, "out");
    *out = dup(bpe->value.apply_line(line));
  });
}

cgnmt_status cgnmt_bpe_apply_file(const cgnmt_bpe* bpe, const char* in_path, const char* out_path) {
  return guarded([&] {
    need(bpe, "bpe");
    need(in_path, "in_path");
    need(out_path, "out_path");
    cgnmt::subword::write_lines(out_path, bpe->value.apply_lines(cgnmt::subword::read_lines(in_path)));
  });
}

void cgnmt_bpe_free(cgnmt_bpe* bpe) { delete bpe; }

cgnmt_status cgnmt_undo_bpe(const char* line, char** out) {
  return guarded([&] {
    need(line, "line");
    need(out, "out");
    *out = dup(cgnmt::subword::undo_bpe(line));
  });
}

cgnmt_status cgnmt_prepare(const cgnmt_config* config, const char* run_dir, const char* train_src, const char* train_tgt,
                           const char* valid_src, const char* valid_tgt) {
  return guarded([&] {
    need(config, "config");
    for (const char* p : {run_dir, train_src, train_tgt, valid_src, valid_tgt}) need(p, "path");
    cgnmt::pipeline::prepare(config->value, {train_src, train_tgt, valid_src, valid_tgt}, run_dir);
  });
}

cgnmt_status cgnmt_train(const cgnmt_config* config, const char* run_dir, cgnmt_epoch_callback callback, void* user, char** best_checkpoint) {
  return guarded([&] {
    need(config, "config");
    need(run_dir, "run_dir");
    std::function<void(const cgnmt::training::EpochRecord&)> progress;
    if (callback)
      progress = [callback, user](const cgnmt::training::EpochRecord& r) {
        callback(r.epoch, r.learning_rate, r.train_loss, r.train_tokens, r.valid_accuracy, user);
      };
    const auto report = cgnmt::pipeline::train(config->value, run_dir, progress);
    cgnmt::training::write_best_marker(cgnmt::pipeline::RunLayout{run_dir}.checkpoints(), report.best);
    if (best_checkpoint) *best_checkpoint = dup(report.best.path.string());
  });
}

cgnmt_status cgnmt_translator_open(const char* run_dir, const char* checkpoint, cgnmt_translator** out) {
  return guarded([&] {
    need(run_dir, "run_dir");
    need(out, "out");
    auto t = std::make_unique<cgnmt_translator>();
    t->run = std::make_unique<cgnmt::pipeline::TrainedRun>(run_dir, checkpoint ? checkpoint : "");
    t->options = t->run->config().beam_options();
    *out = t.release();
  });
}

cgnmt_status cgnmt_translator_set_beam(cgnmt_translator* t, size_t beam, size_t max_len, size_t splits, int normalize_length) {
  return guarded([&] {
    need(t, "translator");
    if (beam < 1 || max_len < 1 || splits < 1) cgnmt::fail(cgnmt::ErrorCode::Config, "beam, max_len and splits must be at least 1");
    t->options = {beam, max_len, splits, normalize_length != 0};
  });
}

cgnmt_status cgnmt_translator_set_segmented_input(cgnmt_translator* t, int segmented) {
  return guarded([&] {
    need(t, "translator");
    t->segmented = segmented != 0;
  });
}

cgnmt_status cgnmt_translate_line(const cgnmt_translator* t, const char* line, char** out) {
  return guarded([&] {
    need(t, "translator");
    need(line, "line");
    need(out, "out");
    *out = dup(t->run->translate(line, t->options, t->segmented));
  });
}

cgnmt_status cgnmt_translate_file(const cgnmt_translator* t, const char* in_path, const char* out_path, size_t threads) {
  return guarded([&] {
    need(t, "translator");
    need(in_path, "in_path");
    need(out_path, "out_path");
    const auto lines = cgnmt::subword::read_lines(in_path);
    const auto hyps = t->run->translate_all(lines, t->options, threads ? threads : cgnmt::pipeline::thread_limit(), t->segmented);
    cgnmt::subword::write_lines(out_path, hyps);
  });
}

void cgnmt_translator_free(cgnmt_translator* t) { delete t; }

cgnmt_status cgnmt_bleu_files(const char* hyp_path, const char* ref_path, int lowercase, double* out) {
  return guarded([&] {
    need(hyp_path, "hyp_path");
    need(ref_path, "ref_path");
    need(out, "out");
    *out = cgnmt::eval::bleu(cgnmt::subword::read_lines(hyp_path), cgnmt::subword::read_lines(ref_path), lowercase != 0);
  });
}

cgnmt_status cgnmt_bleu_lines(const char* const* hyps, const char* const* refs, size_t n, int lowercase, double* out) {
  return guarded([&] {
    need(out, "out");
    if (n > 0) {
      need(hyps, "hyps");
      need(refs, "refs");
    }
    std::vector<std::string> h, r;
    for (size_t i = 0; i < n; ++i) {
      need(hyps[i], "hypothesis");
      need(refs[i], "reference");
      h.emplace_back(hyps[i]);
      r.emplace_back(refs[i]);
    }
    *out = cgnmt::eval::bleu(h, r, lowercase != 0);
  });
}

cgnmt_status cgnmt_analyze(const char* corpus_path, const char* alignment_path, const char* forward_path, const char* backward_path,
                           const char* unimorph_path, char** report) {
  return guarded([&] {
    need(report, "report");
    namespace an = cgnmt::analysis;
    std::string out;
    if (corpus_path) {
      const auto corpus = tokenized_lines(corpus_path);
      out += "TT = " + fixed4(an::type_token_ratio(corpus)) + "\n";
      out += "H = " + fixed4(an::word_entropy(corpus)) + "\n";
    }
    if (alignment_path && (forward_path || backward_path))
      cgnmt::fail(cgnmt::ErrorCode::InvalidArgument, "give either alignments or a forward/backward pair, not both");
    if (alignment_path) {
      out += "A = " + fixed4(an::alignment_score(an::parse_pharaoh(cgnmt::subword::read_lines(alignment_path)))) + "\n";
    } else if (forward_path || backward_path) {
      need(forward_path, "forward_path");
      need(backward_path, "backward_path");
      const auto sym = an::symmetrize_gdfa(an::parse_pharaoh(cgnmt::subword::read_lines(forward_path)),
                                           an::parse_pharaoh(cgnmt::subword::read_lines(backward_path)));
      out += "A = " + fixed4(an::alignment_score(sym)) + "\n";
    }
    if (unimorph_path) {
      const auto lex = an::read_unimorph(unimorph_path);
      const auto s = an::unimorph_stats(lex);
      out += "UT = " + std::to_string(s.tags) + "\nUTC = " + std::to_string(s.combinations) + "\n";
      if (lex.skipped) out += "unimorph_skipped = " + std::to_string(lex.skipped) + "\n";
    }
    if (out.empty()) cgnmt::fail(cgnmt::ErrorCode::InvalidArgument, "analyze: no inputs given");
    *report = dup(out);
  });
}

cgnmt_status cgnmt_symmetrize(const char* forward_path, const char* backward_path, const char* out_path) {
  return guarded([&] {
    need(forward_path, "forward_path");
    need(backward_path, "backward_path");
    need(out_path, "out_path");
    namespace an = cgnmt::analysis;
    const auto sym = an::symmetrize_gdfa(an::parse_pharaoh(cgnmt::subword::read_lines(forward_path)),
                                         an::parse_pharaoh(cgnmt::subword::read_lines(backward_path)));
    cgnmt::subword::write_lines(out_path, an::to_pharaoh(sym));
  });
}

cgnmt_status cgnmt_regress(const char* table_path, double lambda, char** weights_tsv) {
  return guarded([&] {
    need(table_path, "table_path");
    need(weights_tsv, "weights_tsv");
    namespace an = cgnmt::analysis;
    const auto table = an::parse_feature_table(cgnmt::subword::read_file(table_path));
    const auto model = an::fit_feature_augmented_ridge(table, lambda);
    *weights_tsv = dup(an::format_weights(model, {an::kFeatureNames.begin(), an::kFeatureNames.end()}));
  });
}

cgnmt_status cgnmt_sweep(const cgnmt_config* base, const char* settings, const char* train_src, const char* train_tgt,
                         const char* valid_src, const char* valid_tgt, const char* test_src, const char* test_tgt, const char* out_dir,
                         char** table) {
  return guarded([&] {
    need(base, "base");
    need(settings, "settings");
    for (const char* p : {train_src, train_tgt, valid_src, valid_tgt, test_src, test_tgt, out_dir}) need(p, "path");
    cgnmt::pipeline::SweepSpec spec{cgnmt::pipeline::SweepSpec::parse_settings(settings), base->value};
    const auto cells = cgnmt::pipeline::run_sweep(spec, {{train_src, train_tgt, valid_src, valid_tgt}, test_src, test_tgt}, out_dir,
                                                  [](const std::string& msg) { std::fprintf(stderr, "sweep: %s\n", msg.c_str()); });
    if (table) *table = dup(cgnmt::pipeline::sweep_table(cells));
  });
}

cgnmt_status cgnmt_sha256_file(const char* path, char** hex) {
  return guarded([&] {
    need(path, "path");
    need(hex, "hex");
    *hex = dup(cgnmt::sha256_file(path));
  });
}

cgnmt_status cgnmt_manifest_append(const char* manifest_path, const char* command, const char* const* argv, size_t argc,
                                   const cgnmt_config* config, const char* const* inputs, size_t n_inputs, const char* const* outputs,
                                   size_t n_outputs, const char* started, double wall_clock_seconds) {
  return guarded([&] {
    need(manifest_path, "manifest_path");
    need(command, "command");
    cgnmt::pipeline::Manifest m;
    m.command = command;
    for (size_t i = 0; i < argc; ++i) m.argv.emplace_back(argv[i]);
    if (config) {
      m.config = config->value.to_map();
      m.seed = config->value.seed;
    }
    for (size_t i = 0; i < n_inputs; ++i) m.add_input(inputs[i]);
    for (size_t i = 0; i < n_outputs; ++i) m.add_output(outputs[i]);
    m.started = started ? started : cgnmt::pipeline::utc_now();
    m.wall_clock_seconds = wall_clock_seconds;
    cgnmt::pipeline::append_manifest(manifest_path, m);
  });
}

size_t cgnmt_thread_limit(void) {
  try {
    return cgnmt::pipeline::thread_limit();
  } catch (...) {
    return 1;
  }
}

}  // extern "C"
