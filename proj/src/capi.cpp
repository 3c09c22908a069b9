#include "titlenorm.h"

#include "titlenorm/checkpoint.hpp"
#include "titlenorm/corpus.hpp"
#include "titlenorm/digest.hpp"
#include "titlenorm/encoder.hpp"
#include "titlenorm/error.hpp"
#include "titlenorm/eval.hpp"
#include "titlenorm/index.hpp"
#include "titlenorm/synth.hpp"
#include "titlenorm/tokenizer.hpp"
#include "titlenorm/training.hpp"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <functional>
#include <memory>
#include <sstream>

using namespace titlenorm;

struct tn_corpus {
    std::vector<corpus::JobRecord> records;
};

struct tn_vocab {
    tok::Vocabulary vocab;
};

struct tn_model {
    enc::Model model;
};

struct tn_index {
    index::TitleIndex index;
};

namespace {

thread_local std::string g_last_error;

tn_status to_status(ErrorCode code) {
    switch (code) {
        case ErrorCode::ok: return TN_OK;
        case ErrorCode::invalid_argument: return TN_ERR_INVALID_ARGUMENT;
        case ErrorCode::io_failure: return TN_ERR_IO;
        case ErrorCode::parse_failure: return TN_ERR_PARSE;
        case ErrorCode::numeric_failure: return TN_ERR_NUMERIC;
        case ErrorCode::mismatch: return TN_ERR_MISMATCH;
        case ErrorCode::not_found: return TN_ERR_NOT_FOUND;
    }
    return TN_ERR_INVALID_ARGUMENT;
}

template <typename Fn>
tn_status guarded(Fn&& fn) {
    try {
        fn();
        return TN_OK;
    } catch (const Error& e) {
        g_last_error = e.what();
        return to_status(e.code());
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return TN_ERR_INVALID_ARGUMENT;
    }
}

tn_status require(bool condition, const char* message) {
    if (condition) return TN_OK;
    g_last_error = message;
    return TN_ERR_INVALID_ARGUMENT;
}

char* copy_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out) std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

enc::EmbedMode to_mode(int mode) {
    switch (mode) {
        case TN_MODE_TITLE: return enc::EmbedMode::title;
        case TN_MODE_SKILLS: return enc::EmbedMode::skills;
        case TN_MODE_COMBINED: return enc::EmbedMode::combined;
    }
    raise(ErrorCode::invalid_argument, "unknown mode " + std::to_string(mode));
}

std::vector<std::string> distinct_labels(const std::vector<corpus::JobRecord>& records) {
    std::vector<std::string> labels;
    for (const auto& record : records) {
        if (!record.normalized_title) continue;
        const std::string label = corpus::clean_text(*record.normalized_title);
        if (label.empty()) continue;
        if (std::find(labels.begin(), labels.end(), label) == labels.end()) labels.push_back(label);
    }
    return labels;
}

} // namespace

extern "C" {

const char* tn_version(void) { return "0.1.0"; }

const char* tn_last_error(void) { return g_last_error.c_str(); }

void tn_string_free(char* str) { std::free(str); }

/* ------------------------------------------------------------------ */

void tn_synth_config_default(tn_synth_config* config) {
    if (!config) return;
    *config = tn_synth_config{10, 8, 20, 6, 0.0, 0, 0, 0};
}

tn_status tn_corpus_load_jsonl(const char* path, tn_corpus** out) {
    if (tn_status s = require(path && out, "path and out must be non-null")) return s;
    return guarded([&] { *out = new tn_corpus{corpus::load_jsonl(path)}; });
}

tn_status tn_corpus_load_benchmark(const char* path, tn_corpus** out) {
    if (tn_status s = require(path && out, "path and out must be non-null")) return s;
    return guarded([&] { *out = new tn_corpus{corpus::load_benchmark(path)}; });
}

tn_status tn_corpus_save_jsonl(const tn_corpus* corpus_handle, const char* path) {
    if (tn_status s = require(corpus_handle && path, "corpus and path must be non-null")) return s;
    return guarded([&] { corpus::write_jsonl(corpus_handle->records, path); });
}

tn_status tn_corpus_synthesize(const tn_synth_config* config, uint64_t seed, tn_corpus** out) {
    if (tn_status s = require(config && out, "config and out must be non-null")) return s;
    return guarded([&] {
        corpus::SynthConfig sc;
        sc.families = config->families;
        sc.skills_per_family = config->skills_per_family;
        sc.records_per_family = config->records_per_family;
        sc.skills_per_record = config->skills_per_record;
        sc.noise_rate = config->noise_rate;
        sc.synonym_variants = config->synonym_variants != 0;
        sc.ambiguous_pairs = config->ambiguous_pairs != 0;
        sc.non_latin_count = config->non_latin_count;
        *out = new tn_corpus{corpus::generate_synthetic(sc, seed)};
    });
}

tn_status tn_corpus_preprocess(const tn_corpus* corpus_handle, const char* gazetteer_path,
                               const char* cues_path, tn_corpus** out,
                               tn_preprocess_counts* counts) {
    if (tn_status s = require(corpus_handle && gazetteer_path && out, "corpus, gazetteer and out must be non-null"))
        return s;
    return guarded([&] {
        const auto gazetteer = corpus::load_gazetteer(gazetteer_path);
        const auto cues = cues_path ? corpus::load_cue_file(cues_path) : corpus::default_section_cues();
        corpus::PreprocessCounts local;
        auto cleaned = corpus::preprocess(corpus_handle->records, gazetteer, cues, &local);
        if (counts) {
            counts->read = local.read;
            counts->kept = local.kept;
            counts->dropped_language = local.dropped_language;
            counts->dropped_empty = local.dropped_empty;
            counts->dropped_duplicate = local.dropped_duplicate;
        }
        *out = new tn_corpus{std::move(cleaned)};
    });
}

tn_status tn_corpus_size(const tn_corpus* corpus_handle, size_t* out) {
    if (tn_status s = require(corpus_handle && out, "corpus and out must be non-null")) return s;
    *out = corpus_handle->records.size();
    return TN_OK;
}

tn_status tn_corpus_stats_json(const tn_corpus* corpus_handle, char** json_out) {
    if (tn_status s = require(corpus_handle && json_out, "corpus and out must be non-null")) return s;
    return guarded([&] {
        *json_out = copy_string(corpus::stats_to_json(corpus::compute_stats(corpus_handle->records)));
    });
}

tn_status tn_corpus_labels(const tn_corpus* corpus_handle, char** lines_out) {
    if (tn_status s = require(corpus_handle && lines_out, "corpus and out must be non-null")) return s;
    return guarded([&] {
        std::string joined;
        for (const auto& label : distinct_labels(corpus_handle->records)) {
            joined += label;
            joined += '\n';
        }
        *lines_out = copy_string(joined);
    });
}

void tn_corpus_free(tn_corpus* corpus_handle) { delete corpus_handle; }

/* ------------------------------------------------------------------ */

tn_status tn_vocab_build(const tn_corpus* corpus_handle, int32_t min_frequency, tn_vocab** out) {
    if (tn_status s = require(corpus_handle && out, "corpus and out must be non-null")) return s;
    return guarded([&] {
        std::vector<std::string> texts;
        for (const auto& record : corpus_handle->records) {
            texts.push_back(corpus::clean_text(record.title));
            for (const auto& skill : record.skills) texts.push_back(corpus::clean_text(skill));
        }
        *out = new tn_vocab{tok::Vocabulary::build(texts, min_frequency)};
    });
}

tn_status tn_vocab_load(const char* path, tn_vocab** out) {
    if (tn_status s = require(path && out, "path and out must be non-null")) return s;
    return guarded([&] { *out = new tn_vocab{tok::Vocabulary::load(path)}; });
}

tn_status tn_vocab_save(const tn_vocab* vocab, const char* path) {
    if (tn_status s = require(vocab && path, "vocab and path must be non-null")) return s;
    return guarded([&] { vocab->vocab.save(path); });
}

tn_status tn_vocab_size(const tn_vocab* vocab, size_t* out) {
    if (tn_status s = require(vocab && out, "vocab and out must be non-null")) return s;
    *out = vocab->vocab.size();
    return TN_OK;
}

void tn_vocab_free(tn_vocab* vocab) { delete vocab; }

/* ------------------------------------------------------------------ */

void tn_encoder_config_default(tn_encoder_config* config) {
    if (!config) return;
    const enc::EncoderConfig defaults;
    config->vocab_size = 0;
    config->hidden_dim = defaults.hidden_dim;
    config->num_layers = defaults.num_layers;
    config->num_heads = defaults.num_heads;
    config->ffn_dim = defaults.ffn_dim;
    config->max_positions = defaults.max_positions;
    config->pooled_dim = defaults.pooled_dim;
    config->dropout_rate = defaults.dropout_rate;
    config->init_seed = defaults.init_seed;
}

tn_status tn_model_create(const tn_encoder_config* config, const tn_vocab* vocab, tn_model** out) {
    if (tn_status s = require(config && out, "config and out must be non-null")) return s;
    return guarded([&] {
        enc::EncoderConfig c;
        c.vocab_size = config->vocab_size;
        if (c.vocab_size == 0) {
            if (!vocab) raise(ErrorCode::invalid_argument, "vocab_size 0 requires a vocabulary handle");
            c.vocab_size = static_cast<std::uint32_t>(vocab->vocab.size());
        }
        c.hidden_dim = config->hidden_dim;
        c.num_layers = config->num_layers;
        c.num_heads = config->num_heads;
        c.ffn_dim = config->ffn_dim;
        c.max_positions = config->max_positions;
        c.pooled_dim = config->pooled_dim;
        c.dropout_rate = config->dropout_rate;
        c.init_seed = config->init_seed;
        *out = new tn_model{enc::make_model(c)};
    });
}

tn_status tn_model_load(const char* checkpoint_path, tn_model** out) {
    if (tn_status s = require(checkpoint_path && out, "path and out must be non-null")) return s;
    return guarded([&] { *out = new tn_model{ckpt::load_checkpoint(checkpoint_path)}; });
}

tn_status tn_model_save(const tn_model* model, const char* checkpoint_path, const char* vocab_path) {
    if (tn_status s = require(model && checkpoint_path, "model and path must be non-null")) return s;
    return guarded([&] {
        std::string vocab_hash;
        if (vocab_path) vocab_hash = digest::to_hex(digest::sha256_file(vocab_path));
        ckpt::save_checkpoint(model->model, checkpoint_path, vocab_hash);
    });
}

tn_status tn_model_pooled_dim(const tn_model* model, size_t* out) {
    if (tn_status s = require(model && out, "model and out must be non-null")) return s;
    *out = model->model.config.pooled_dim;
    return TN_OK;
}

tn_status tn_model_fingerprint(const tn_model* model, uint8_t out[TN_FINGERPRINT_SIZE]) {
    if (tn_status s = require(model && out, "model and out must be non-null")) return s;
    return guarded([&] {
        const auto fp = ckpt::model_fingerprint(model->model);
        std::memcpy(out, fp.data(), fp.size());
    });
}

tn_status tn_model_embed(const tn_model* model, const tn_vocab* vocab, const char* title,
                         const char* const* skills, size_t n_skills, int mode, float* out) {
    if (tn_status s = require(model && vocab && title && out, "model, vocab, title, out must be non-null"))
        return s;
    if (tn_status s = require(skills != nullptr || n_skills == 0, "skills null with n_skills > 0")) return s;
    return guarded([&] {
        corpus::JobRecord record;
        record.title = corpus::clean_text(title);
        for (size_t i = 0; i < n_skills; ++i) {
            const std::string skill = corpus::clean_text(skills[i]);
            if (!skill.empty()) record.skills.push_back(skill);
        }
        const enc::Embedding e = enc::embed_record(model->model, vocab->vocab, record, to_mode(mode));
        std::memcpy(out, e.values.data(), e.values.size() * sizeof(float));
    });
}

void tn_model_free(tn_model* model) { delete model; }

/* ------------------------------------------------------------------ */

void tn_train_config_default(tn_train_config* config) {
    if (!config) return;
    const train::TrainConfig defaults;
    config->batch_size = defaults.batch_size;
    config->epochs = defaults.epochs;
    config->learning_rate = defaults.learning_rate;
    config->scale = defaults.scale;
    config->weight_decay = defaults.weight_decay;
    config->shuffle_seed = defaults.shuffle_seed;
    config->validation_fraction = defaults.validation_fraction;
    config->checkpoint_every = defaults.checkpoint_every;
    config->bidirectional = defaults.bidirectional ? 1 : 0;
}

tn_status tn_train(tn_model* model, const tn_vocab* vocab, const tn_corpus* corpus_handle,
                   const tn_train_config* config, const char* log_path, const char* checkpoint_path) {
    if (tn_status s = require(model && vocab && corpus_handle && config, "model, vocab, corpus, config must be non-null"))
        return s;
    return guarded([&] {
        train::TrainConfig tc;
        tc.batch_size = config->batch_size;
        tc.epochs = config->epochs;
        tc.learning_rate = config->learning_rate;
        tc.scale = config->scale;
        tc.weight_decay = config->weight_decay;
        tc.shuffle_seed = config->shuffle_seed;
        tc.validation_fraction = config->validation_fraction;
        tc.checkpoint_every = config->checkpoint_every;
        tc.bidirectional = config->bidirectional != 0;

        std::function<void(std::int64_t)> hook;
        if (checkpoint_path) {
            hook = [&](std::int64_t) { ckpt::save_checkpoint(model->model, checkpoint_path); };
        }
        const train::TrainLog log = train::train(model->model, corpus_handle->records, tc, vocab->vocab, hook);
        if (log_path) {
            std::ofstream out(log_path, std::ios::trunc);
            if (!out) raise(ErrorCode::io_failure, std::string("cannot open for writing: ") + log_path);
            out << train::train_log_to_jsonl(log);
        }
    });
}

/* ------------------------------------------------------------------ */

tn_status tn_index_build(const tn_model* model, const tn_vocab* vocab, const char* labels,
                         tn_index** out) {
    if (tn_status s = require(model && vocab && labels && out, "model, vocab, labels, out must be non-null"))
        return s;
    return guarded([&] {
        std::vector<std::string> label_list;
        std::istringstream in(labels);
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty()) label_list.push_back(line);
        }
        *out = new tn_index{index::build_index(label_list, model->model, vocab->vocab)};
    });
}

tn_status tn_index_save(const tn_index* index_handle, const char* path) {
    if (tn_status s = require(index_handle && path, "index and path must be non-null")) return s;
    return guarded([&] { index::save_index(index_handle->index, path); });
}

tn_status tn_index_load(const char* path, const uint8_t* expected_fingerprint, int force,
                        tn_index** out) {
    if (tn_status s = require(path && out, "path and out must be non-null")) return s;
    return guarded([&] {
        std::optional<digest::Sha256> expected;
        if (expected_fingerprint) {
            digest::Sha256 fp{};
            std::memcpy(fp.data(), expected_fingerprint, fp.size());
            expected = fp;
        }
        *out = new tn_index{index::load_index(path, expected, std::nullopt, force != 0)};
    });
}

tn_status tn_index_size(const tn_index* index_handle, size_t* out) {
    if (tn_status s = require(index_handle && out, "index and out must be non-null")) return s;
    *out = index_handle->index.size();
    return TN_OK;
}

tn_status tn_index_fingerprint(const tn_index* index_handle, uint8_t out[TN_FINGERPRINT_SIZE]) {
    if (tn_status s = require(index_handle && out, "index and out must be non-null")) return s;
    std::memcpy(out, index_handle->index.fingerprint().data(), TN_FINGERPRINT_SIZE);
    return TN_OK;
}

tn_status tn_index_query(const tn_index* index_handle, const float* query, size_t dim, size_t k,
                         tn_search_hit* hits, size_t* n_hits) {
    if (tn_status s = require(index_handle && query && hits && n_hits, "index, query, hits, n_hits must be non-null"))
        return s;
    return guarded([&] {
        const std::vector<float> q(query, query + dim);
        const index::SearchResult result = index::query(index_handle->index, q, k);
        *n_hits = result.ranked.size();
        for (std::size_t i = 0; i < result.ranked.size(); ++i) {
            hits[i].label_id = result.ranked[i].label_id;
            hits[i].label = index_handle->index.label(result.ranked[i].label_id).c_str();
            hits[i].score = result.ranked[i].score;
        }
    });
}

void tn_index_free(tn_index* index_handle) { delete index_handle; }

/* ------------------------------------------------------------------ */

void tn_eval_options_default(tn_eval_options* options) {
    if (!options) return;
    options->modes = TN_EVAL_MODE_TITLE | TN_EVAL_MODE_COMBINED;
    options->include_baseline = 0;
    options->baseline_seed = 0;
    options->baseline_dim = 32;
    options->top_k = 10;
    options->have_reference = 0;
    options->reference_r1 = 0.0;
    options->reference_r5 = 0.0;
    options->reference_r10 = 0.0;
}

tn_status tn_evaluate(const tn_model* model, const tn_vocab* vocab, const tn_corpus* benchmark,
                      const tn_eval_options* options, char** report_json_out,
                      char** report_table_out) {
    if (tn_status s = require(model && vocab && benchmark && options, "model, vocab, benchmark, options must be non-null"))
        return s;
    return guarded([&] {
        std::vector<enc::EmbedMode> modes;
        if (options->modes & TN_EVAL_MODE_TITLE) modes.push_back(enc::EmbedMode::title);
        if (options->modes & TN_EVAL_MODE_SKILLS) modes.push_back(enc::EmbedMode::skills);
        if (options->modes & TN_EVAL_MODE_COMBINED) modes.push_back(enc::EmbedMode::combined);
        if (modes.empty()) raise(ErrorCode::invalid_argument, "no evaluation modes selected");

        std::vector<eval::EncoderSpec> encoders;
        eval::EncoderSpec transformer;
        transformer.name = "dual-encoder";
        transformer.embed = [&](const corpus::JobRecord& record, enc::EmbedMode mode) {
            corpus::JobRecord cleaned = record;
            cleaned.title = corpus::clean_text(record.title);
            return enc::embed_record(model->model, vocab->vocab, cleaned, mode);
        };
        transformer.build_index = [&](const std::vector<std::string>& labels) {
            return index::build_index(labels, model->model, vocab->vocab);
        };
        encoders.push_back(transformer);

        std::shared_ptr<enc::StaticTable> table;
        if (options->include_baseline) {
            table = std::make_shared<enc::StaticTable>(
                enc::make_static_table(vocab->vocab.size(), options->baseline_dim, options->baseline_seed));
            eval::EncoderSpec baseline;
            baseline.name = "static-baseline";
            baseline.embed = [table, vocab](const corpus::JobRecord& record, enc::EmbedMode mode) {
                corpus::JobRecord cleaned = record;
                cleaned.title = corpus::clean_text(record.title);
                return enc::static_embed(*table, vocab->vocab, cleaned, mode);
            };
            baseline.build_index = [table, vocab](const std::vector<std::string>& labels) {
                return index::build_index_with(
                    labels,
                    [&](const std::string& label) {
                        corpus::JobRecord record;
                        record.title = label;
                        return enc::static_embed(*table, vocab->vocab, record, enc::EmbedMode::title);
                    },
                    digest::Sha256{});
            };
            encoders.push_back(baseline);
        }

        std::optional<eval::RecallTriple> reference;
        if (options->have_reference) {
            reference = eval::RecallTriple{options->reference_r1, options->reference_r5,
                                           options->reference_r10};
        }

        const auto labels = distinct_labels(benchmark->records);
        const auto report =
            eval::compare_encoders(benchmark->records, encoders, modes, labels, reference,
                                   "reference", static_cast<std::size_t>(options->top_k));
        if (report_json_out) *report_json_out = copy_string(eval::report_to_json(report));
        if (report_table_out) *report_table_out = copy_string(eval::report_to_table(report));
    });
}

} // extern "C"
