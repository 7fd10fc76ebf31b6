/* SPDX-License-Identifier: Apache-2.0 */
#ifndef CGNMT_CGNMT_H
#define CGNMT_CGNMT_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define CGNMT_API __declspec(dllexport)
#else
#define CGNMT_API __attribute__((visibility("default")))
#endif

/* Status codes. Every fallible call returns one; on failure a description is
 * available from cgnmt_last_error() on the calling thread. */
typedef enum cgnmt_status {
  CGNMT_OK = 0,
  CGNMT_ERR_INVALID_ARGUMENT = 1,
  CGNMT_ERR_DIMENSION = 2,
  CGNMT_ERR_INDEX = 3,
  CGNMT_ERR_CONFIG = 4,
  CGNMT_ERR_IO = 5,
  CGNMT_ERR_FORMAT = 6,
  CGNMT_ERR_NUMERIC = 7,
  CGNMT_ERR_STATE = 8,
  CGNMT_ERR_INTERNAL = 99
} cgnmt_status;

CGNMT_API const char* cgnmt_version(void);
CGNMT_API const char* cgnmt_status_name(cgnmt_status status);
/* Message of the last failure on this thread, "" when none. Valid until the
 * next call on the same thread. */
CGNMT_API const char* cgnmt_last_error(void);
/* Frees any string returned through a char** out-parameter. */
CGNMT_API void cgnmt_string_free(char* s);

/* ---- configuration ---- */
typedef struct cgnmt_config cgnmt_config;

CGNMT_API cgnmt_status cgnmt_config_new(cgnmt_config** out);
CGNMT_API cgnmt_status cgnmt_config_load(const char* path, cgnmt_config** out);
CGNMT_API cgnmt_status cgnmt_config_parse(const char* text, cgnmt_config** out);
CGNMT_API cgnmt_status cgnmt_config_set(cgnmt_config* config, const char* key, const char* value);
CGNMT_API cgnmt_status cgnmt_config_get(const cgnmt_config* config, const char* key, char** value);
CGNMT_API cgnmt_status cgnmt_config_validate(const cgnmt_config* config);
CGNMT_API cgnmt_status cgnmt_config_to_text(const cgnmt_config* config, char** text);
CGNMT_API cgnmt_status cgnmt_config_digest(const cgnmt_config* config, char** hex);
CGNMT_API void cgnmt_config_free(cgnmt_config* config);

/* ---- subword segmentation ---- */
typedef struct cgnmt_bpe cgnmt_bpe;

/* Learns merges on a whitespace-tokenized text file. */
CGNMT_API cgnmt_status cgnmt_bpe_learn(const char* corpus_path, size_t num_merges, cgnmt_bpe** out);
CGNMT_API cgnmt_status cgnmt_bpe_load(const char* path, cgnmt_bpe** out);
CGNMT_API cgnmt_status cgnmt_bpe_save(const cgnmt_bpe* bpe, const char* path);
CGNMT_API size_t cgnmt_bpe_size(const cgnmt_bpe* bpe);
CGNMT_API cgnmt_status cgnmt_bpe_apply_line(const cgnmt_bpe* bpe, const char* line, char** out);
CGNMT_API cgnmt_status cgnmt_bpe_apply_file(const cgnmt_bpe* bpe, const char* in_path, const char* out_path);
CGNMT_API void cgnmt_bpe_free(cgnmt_bpe* bpe);
CGNMT_API cgnmt_status cgnmt_undo_bpe(const char* line, char** out);

/* ---- runs ---- */
/* Filters, segments and builds vocabularies into run_dir. */
CGNMT_API cgnmt_status cgnmt_prepare(const cgnmt_config* config, const char* run_dir, const char* train_src, const char* train_tgt,
                                     const char* valid_src, const char* valid_tgt);

/* Called after every finished epoch during cgnmt_train. */
typedef void (*cgnmt_epoch_callback)(size_t epoch, double learning_rate, double train_loss, size_t train_tokens, double valid_accuracy,
                                     void* user);
/* Trains (or resumes) a prepared run. best_checkpoint may be NULL. */
CGNMT_API cgnmt_status cgnmt_train(const cgnmt_config* config, const char* run_dir, cgnmt_epoch_callback callback, void* user,
                                   char** best_checkpoint);

typedef struct cgnmt_translator cgnmt_translator;

/* checkpoint NULL or "" loads the run's best checkpoint. */
CGNMT_API cgnmt_status cgnmt_translator_open(const char* run_dir, const char* checkpoint, cgnmt_translator** out);
/* Decoding options; the run's configuration supplies the defaults. */
CGNMT_API cgnmt_status cgnmt_translator_set_beam(cgnmt_translator* t, size_t beam, size_t max_len, size_t splits, int normalize_length);
/* Nonzero: input lines already carry the run's source BPE. */
CGNMT_API cgnmt_status cgnmt_translator_set_segmented_input(cgnmt_translator* t, int segmented);
CGNMT_API cgnmt_status cgnmt_translate_line(const cgnmt_translator* t, const char* line, char** out);
/* threads 0: use CGNMT_THREADS or the hardware concurrency. */
CGNMT_API cgnmt_status cgnmt_translate_file(const cgnmt_translator* t, const char* in_path, const char* out_path, size_t threads);
CGNMT_API void cgnmt_translator_free(cgnmt_translator* t);

/* ---- evaluation and analysis ---- */
CGNMT_API cgnmt_status cgnmt_bleu_files(const char* hyp_path, const char* ref_path, int lowercase, double* out);
CGNMT_API cgnmt_status cgnmt_bleu_lines(const char* const* hyps, const char* const* refs, size_t n, int lowercase, double* out);

/* Any path may be NULL to skip the features it feeds:
 *   corpus -> TT, H; alignments (or forward+backward, symmetrized) -> A; unimorph -> UT, UTC.
 * The report has one "name = value" line per feature: ratios to 4 decimals, counts as integers. */
CGNMT_API cgnmt_status cgnmt_analyze(const char* corpus_path, const char* alignment_path, const char* forward_path,
                                     const char* backward_path, const char* unimorph_path, char** report);
/* Writes the grow-diag-final-and symmetrization in Pharaoh format. */
CGNMT_API cgnmt_status cgnmt_symmetrize(const char* forward_path, const char* backward_path, const char* out_path);
/* Feature table TSV in, weight matrix TSV out. */
CGNMT_API cgnmt_status cgnmt_regress(const char* table_path, double lambda, char** weights_tsv);

/* Settings like "0,1600,word". Writes sweep.tsv and sweep_plot.dat into out_dir
 * and returns the table text. */
CGNMT_API cgnmt_status cgnmt_sweep(const cgnmt_config* base, const char* settings, const char* train_src, const char* train_tgt,
                                   const char* valid_src, const char* valid_tgt, const char* test_src, const char* test_tgt,
                                   const char* out_dir, char** table);

/* ---- artifacts ---- */
CGNMT_API cgnmt_status cgnmt_sha256_file(const char* path, char** hex);
/* Appends one manifest record. inputs/outputs are paths whose digests are taken now. */
/* started NULL stamps the current UTC time. */
CGNMT_API cgnmt_status cgnmt_manifest_append(const char* manifest_path, const char* command, const char* const* argv, size_t argc,
                                             const cgnmt_config* config, const char* const* inputs, size_t n_inputs,
                                             const char* const* outputs, size_t n_outputs, const char* started,
                                             double wall_clock_seconds);
CGNMT_API size_t cgnmt_thread_limit(void);

#ifdef __cplusplus
}
#endif

#endif /* CGNMT_CGNMT_H */
