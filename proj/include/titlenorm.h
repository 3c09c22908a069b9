/*
 * titlenorm - job-title normalization engine.
 *
 * C interface to the shared library. All functions return tn_status (TN_OK
 * on success); on failure tn_last_error() gives a thread-local message.
 * Objects are opaque handles created by tn_*_create/load functions and
 * released with the matching tn_*_free. Handles are immutable after
 * creation unless a function documents otherwise, and may be shared across
 * threads for read-only use.
 */

#ifndef TITLENORM_H
#define TITLENORM_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef int tn_status;

#define TN_OK 0
#define TN_ERR_INVALID_ARGUMENT 1
#define TN_ERR_IO 2
#define TN_ERR_PARSE 3
#define TN_ERR_NUMERIC 4
#define TN_ERR_MISMATCH 5
#define TN_ERR_NOT_FOUND 6

#define TN_MODE_TITLE 0
#define TN_MODE_SKILLS 1
#define TN_MODE_COMBINED 2

#define TN_FINGERPRINT_SIZE 32

typedef struct tn_corpus tn_corpus;
typedef struct tn_vocab tn_vocab;
typedef struct tn_model tn_model;
typedef struct tn_index tn_index;

const char* tn_version(void);
const char* tn_last_error(void);

/* Frees strings returned through char** out-parameters. */
void tn_string_free(char* str);

/* ------------------------------------------------------------------ */
/* Corpus                                                              */
/* ------------------------------------------------------------------ */

typedef struct tn_synth_config {
    int32_t families;           /* >= 2 */
    int32_t skills_per_family;  /* >= 4 */
    int32_t records_per_family; /* >= 1 */
    int32_t skills_per_record;  /* 1..skills_per_family */
    double noise_rate;          /* [0, 1) */
    int32_t synonym_variants;   /* bool */
    int32_t ambiguous_pairs;    /* bool */
    int32_t non_latin_count;
} tn_synth_config;

typedef struct tn_preprocess_counts {
    uint64_t read;
    uint64_t kept;
    uint64_t dropped_language;
    uint64_t dropped_empty;
    uint64_t dropped_duplicate;
} tn_preprocess_counts;

/* Fills a config with the library defaults (10 families x 20 records). */
void tn_synth_config_default(tn_synth_config* config);

tn_status tn_corpus_load_jsonl(const char* path, tn_corpus** out);
/* Keeps only records that carry a normalized title. */
tn_status tn_corpus_load_benchmark(const char* path, tn_corpus** out);
tn_status tn_corpus_save_jsonl(const tn_corpus* corpus, const char* path);
tn_status tn_corpus_synthesize(const tn_synth_config* config, uint64_t seed, tn_corpus** out);
/* clean -> language gate -> sentence filter -> skill extraction -> dedup. */
tn_status tn_corpus_preprocess(const tn_corpus* corpus, const char* gazetteer_path,
                               const char* cues_path_or_null, tn_corpus** out,
                               tn_preprocess_counts* counts_or_null);
tn_status tn_corpus_size(const tn_corpus* corpus, size_t* out);
/* JSON object with record counts, skill-count buckets and family histogram. */
tn_status tn_corpus_stats_json(const tn_corpus* corpus, char** json_out);
/* Distinct cleaned normalized titles, one per line (the index label set). */
tn_status tn_corpus_labels(const tn_corpus* corpus, char** lines_out);
void tn_corpus_free(tn_corpus* corpus);

/* ------------------------------------------------------------------ */
/* Vocabulary                                                          */
/* ------------------------------------------------------------------ */

/* Builds from cleaned titles plus skill strings of every record. */
tn_status tn_vocab_build(const tn_corpus* corpus, int32_t min_frequency, tn_vocab** out);
tn_status tn_vocab_load(const char* path, tn_vocab** out);
tn_status tn_vocab_save(const tn_vocab* vocab, const char* path);
tn_status tn_vocab_size(const tn_vocab* vocab, size_t* out);
void tn_vocab_free(tn_vocab* vocab);

/* ------------------------------------------------------------------ */
/* Encoder model                                                       */
/* ------------------------------------------------------------------ */

typedef struct tn_encoder_config {
    uint32_t vocab_size; /* 0 = take the vocabulary handle's size */
    uint32_t hidden_dim;
    uint32_t num_layers;
    uint32_t num_heads;
    uint32_t ffn_dim;
    uint32_t max_positions;
    uint32_t pooled_dim;
    float dropout_rate;
    uint64_t init_seed;
} tn_encoder_config;

void tn_encoder_config_default(tn_encoder_config* config);

tn_status tn_model_create(const tn_encoder_config* config, const tn_vocab* vocab, tn_model** out);
tn_status tn_model_load(const char* checkpoint_path, tn_model** out);
/* Atomic write of checkpoint + sibling JSON manifest. vocab_path may be NULL;
 * when given, its SHA-256 is recorded in the manifest. */
tn_status tn_model_save(const tn_model* model, const char* checkpoint_path,
                        const char* vocab_path_or_null);
tn_status tn_model_pooled_dim(const tn_model* model, size_t* out);
tn_status tn_model_fingerprint(const tn_model* model, uint8_t out[TN_FINGERPRINT_SIZE]);
/* Unit-norm embedding of one record; out must hold pooled_dim floats.
 * skills may be NULL when n_skills is 0 (combined mode falls back to title). */
tn_status tn_model_embed(const tn_model* model, const tn_vocab* vocab, const char* title,
                         const char* const* skills, size_t n_skills, int mode, float* out);
void tn_model_free(tn_model* model);

/* ------------------------------------------------------------------ */
/* Training                                                            */
/* ------------------------------------------------------------------ */

typedef struct tn_train_config {
    int32_t batch_size;
    int32_t epochs;
    double learning_rate;
    double scale;
    double weight_decay;
    uint64_t shuffle_seed;
    double validation_fraction;
    int32_t checkpoint_every; /* steps between validation probes; 0 = end only */
    int32_t bidirectional;    /* bool */
} tn_train_config;

void tn_train_config_default(tn_train_config* config);

/* Trains the model in place (the one mutating model operation). Writes a
 * JSONL training log when log_path is non-NULL and periodic checkpoints to
 * checkpoint_path when given together with checkpoint_every > 0. */
tn_status tn_train(tn_model* model, const tn_vocab* vocab, const tn_corpus* corpus,
                   const tn_train_config* config, const char* log_path_or_null,
                   const char* checkpoint_path_or_null);

/* ------------------------------------------------------------------ */
/* Title index and search                                              */
/* ------------------------------------------------------------------ */

typedef struct tn_search_hit {
    uint32_t label_id;
    const char* label; /* owned by the index handle */
    float score;
} tn_search_hit;

/* labels: newline-separated normalized titles (as tn_corpus_labels emits). */
tn_status tn_index_build(const tn_model* model, const tn_vocab* vocab, const char* labels,
                         tn_index** out);
tn_status tn_index_save(const tn_index* index, const char* path);
/* expected_fingerprint may be NULL to skip the check; force ignores both the
 * fingerprint and dimension expectations. */
tn_status tn_index_load(const char* path, const uint8_t* expected_fingerprint, int force,
                        tn_index** out);
tn_status tn_index_size(const tn_index* index, size_t* out);
tn_status tn_index_fingerprint(const tn_index* index, uint8_t out[TN_FINGERPRINT_SIZE]);
/* Exact top-k cosine scan. hits must hold k entries; *n_hits gets min(k, n).
 * Hit label pointers stay valid until the index handle is freed. */
tn_status tn_index_query(const tn_index* index, const float* query, size_t dim, size_t k,
                         tn_search_hit* hits, size_t* n_hits);
void tn_index_free(tn_index* index);

/* ------------------------------------------------------------------ */
/* Evaluation                                                          */
/* ------------------------------------------------------------------ */

typedef struct tn_eval_options {
    int32_t modes;            /* bitmask: 1 = title, 2 = skills, 4 = combined */
    int32_t include_baseline; /* add the random-static word-averaging baseline */
    uint64_t baseline_seed;
    uint32_t baseline_dim;
    int32_t top_k;
    int32_t have_reference; /* compare every row against the triple below */
    double reference_r1;
    double reference_r5;
    double reference_r10;
} tn_eval_options;

#define TN_EVAL_MODE_TITLE 1
#define TN_EVAL_MODE_SKILLS 2
#define TN_EVAL_MODE_COMBINED 4

void tn_eval_options_default(tn_eval_options* options);

/* Evaluates Recall@{1,5,10} of the model (and optionally the baseline) on a
 * benchmark corpus; each encoder gets its own index over the benchmark's
 * label set. Either output may be NULL when not wanted. */
tn_status tn_evaluate(const tn_model* model, const tn_vocab* vocab, const tn_corpus* benchmark,
                      const tn_eval_options* options, char** report_json_out,
                      char** report_table_out);

#ifdef __cplusplus
}
#endif

#endif /* TITLENORM_H */
