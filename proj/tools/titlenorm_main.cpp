// titlenorm command-line tool. Drives the shared library exclusively through
// the C API in titlenorm.h; exit codes: 0 success, 2 usage/config/io errors,
// 3 numeric failures.

#include <titlenorm.h>

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;

int exit_code_for(tn_status status) {
    return status == TN_ERR_NUMERIC ? kExitNumeric : kExitUsage;
}

[[noreturn]] void fail(tn_status status) {
    std::cerr << "error: " << tn_last_error() << "\n";
    std::exit(exit_code_for(status));
}

void check(tn_status status) {
    if (status != TN_OK) fail(status);
}

using CorpusPtr = std::unique_ptr<tn_corpus, decltype(&tn_corpus_free)>;
using VocabPtr = std::unique_ptr<tn_vocab, decltype(&tn_vocab_free)>;
using ModelPtr = std::unique_ptr<tn_model, decltype(&tn_model_free)>;
using IndexPtr = std::unique_ptr<tn_index, decltype(&tn_index_free)>;

CorpusPtr load_corpus(const std::string& path) {
    tn_corpus* corpus = nullptr;
    check(tn_corpus_load_jsonl(path.c_str(), &corpus));
    return CorpusPtr(corpus, tn_corpus_free);
}

VocabPtr load_vocab(const std::string& path) {
    tn_vocab* vocab = nullptr;
    check(tn_vocab_load(path.c_str(), &vocab));
    return VocabPtr(vocab, tn_vocab_free);
}

ModelPtr load_model(const std::string& path) {
    tn_model* model = nullptr;
    check(tn_model_load(path.c_str(), &model));
    return ModelPtr(model, tn_model_free);
}

std::vector<std::string> split_csv(const std::string& csv) {
    std::vector<std::string> items;
    std::stringstream in(csv);
    std::string item;
    while (std::getline(in, item, ',')) {
        const auto begin = item.find_first_not_of(" \t");
        if (begin == std::string::npos) continue;
        const auto end = item.find_last_not_of(" \t");
        items.push_back(item.substr(begin, end - begin + 1));
    }
    return items;
}

void write_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        std::cerr << "error: cannot open for writing: " << path << "\n";
        std::exit(kExitUsage);
    }
    out << contents;
}

struct GlobalOptions {
    std::uint64_t data_seed = 0;
    std::uint64_t model_seed = 0;
    bool quiet = false;
};

void say(const GlobalOptions& global, const std::string& line) {
    if (!global.quiet) std::cout << line << "\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"titlenorm: train, index and evaluate a title/skills dual encoder"};
    app.name("titlenorm");
    app.require_subcommand(1);
    app.set_config("--config", "", "flat key = value config file; flags take precedence");
    app.allow_config_extras(CLI::config_extras_mode::ignore_all);

    GlobalOptions global;
    app.add_option("--data-seed", global.data_seed, "seed for corpus synthesis and shuffling")
        ->capture_default_str();
    app.add_option("--model-seed", global.model_seed, "seed for parameter initialization")
        ->capture_default_str();
    app.add_flag("--quiet", global.quiet, "suppress progress lines");

    // ---------------------------------------------------------------- synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic labeled corpus");
    tn_synth_config synth_config;
    tn_synth_config_default(&synth_config);
    std::string synth_out;
    bool synth_synonyms = false;
    bool synth_ambiguous = false;
    synth->add_option("--out", synth_out, "output JSONL path")->required();
    synth->add_option("--families", synth_config.families, "number of title families")
        ->capture_default_str();
    synth->add_option("--skills-per-family", synth_config.skills_per_family, "skill pool size per family")
        ->capture_default_str();
    synth->add_option("--records-per-family", synth_config.records_per_family, "records per family")
        ->capture_default_str();
    synth->add_option("--skills-per-record", synth_config.skills_per_record, "skills drawn per record")
        ->capture_default_str();
    synth->add_option("--noise", synth_config.noise_rate, "cross-family skill contamination rate")
        ->capture_default_str();
    synth->add_flag("--synonym-variants", synth_synonyms, "add lexically disjoint title variants");
    synth->add_flag("--ambiguous-pairs", synth_ambiguous, "family pairs share one title variant");
    synth->add_option("--non-latin", synth_config.non_latin_count, "number of non-Latin records")
        ->capture_default_str();

    // ----------------------------------------------------------- preprocess
    auto* preprocess = app.add_subcommand("preprocess", "clean, filter and extract skills");
    std::string pre_in, pre_out, pre_gazetteer, pre_cues;
    preprocess->add_option("--in", pre_in, "raw JSONL input")->required();
    preprocess->add_option("--out", pre_out, "cleaned JSONL output")->required();
    preprocess->add_option("--gazetteer", pre_gazetteer, "skill lexicon, one lowercase skill per line")
        ->required();
    preprocess->add_option("--cues", pre_cues, "boilerplate cue file (default: built-in list)");

    // ---------------------------------------------------------------- stats
    auto* stats = app.add_subcommand("stats", "corpus statistics as JSON");
    std::string stats_in, stats_out;
    stats->add_option("--in", stats_in, "JSONL corpus")->required();
    stats->add_option("--out", stats_out, "write JSON here instead of stdout");

    // ---------------------------------------------------------------- train
    auto* train_cmd = app.add_subcommand("train", "train the dual encoder");
    tn_train_config train_config;
    tn_train_config_default(&train_config);
    tn_encoder_config encoder_config;
    tn_encoder_config_default(&encoder_config);
    std::string train_corpus, train_ckpt_out, train_vocab_out, train_vocab_in, train_resume, train_log;
    int train_min_frequency = 1;
    bool train_bidirectional = false;
    train_cmd->add_option("--corpus", train_corpus, "training JSONL corpus")->required();
    train_cmd->add_option("--checkpoint-out", train_ckpt_out, "checkpoint output path")->required();
    train_cmd->add_option("--vocab-out", train_vocab_out, "write the built vocabulary here");
    train_cmd->add_option("--vocab", train_vocab_in, "use an existing vocabulary file");
    train_cmd->add_option("--resume", train_resume, "resume from an existing checkpoint");
    train_cmd->add_option("--log", train_log, "training log JSONL path");
    train_cmd->add_option("--min-frequency", train_min_frequency, "vocabulary frequency cutoff")
        ->capture_default_str();
    train_cmd->add_option("--batch-size", train_config.batch_size, "contrastive batch size")
        ->capture_default_str();
    train_cmd->add_option("--epochs", train_config.epochs, "training epochs")->capture_default_str();
    train_cmd->add_option("--learning-rate", train_config.learning_rate, "optimizer learning rate")
        ->capture_default_str();
    train_cmd->add_option("--scale", train_config.scale, "similarity temperature multiplier")
        ->capture_default_str();
    train_cmd->add_option("--weight-decay", train_config.weight_decay, "decoupled weight decay")
        ->capture_default_str();
    train_cmd->add_option("--validation-fraction", train_config.validation_fraction,
                          "held-out validation fraction")
        ->capture_default_str();
    train_cmd->add_option("--checkpoint-every", train_config.checkpoint_every,
                          "steps between validation probes and periodic checkpoints")
        ->capture_default_str();
    train_cmd->add_flag("--bidirectional", train_bidirectional, "symmetric loss over both directions");
    train_cmd->add_option("--hidden-dim", encoder_config.hidden_dim, "transformer width")
        ->capture_default_str();
    train_cmd->add_option("--layers", encoder_config.num_layers, "transformer depth")
        ->capture_default_str();
    train_cmd->add_option("--heads", encoder_config.num_heads, "attention heads")->capture_default_str();
    train_cmd->add_option("--ffn-dim", encoder_config.ffn_dim, "feed-forward width")
        ->capture_default_str();
    train_cmd->add_option("--pooled-dim", encoder_config.pooled_dim, "embedding dimension")
        ->capture_default_str();
    train_cmd->add_option("--dropout", encoder_config.dropout_rate, "dropout rate")
        ->capture_default_str();

    // ---------------------------------------------------------------- embed
    auto* embed = app.add_subcommand("embed", "print the embedding of a title (and skills)");
    std::string embed_ckpt, embed_vocab, embed_title, embed_skills, embed_mode = "title";
    embed->add_option("--checkpoint", embed_ckpt, "model checkpoint")->required();
    embed->add_option("--vocab", embed_vocab, "vocabulary file")->required();
    embed->add_option("--title", embed_title, "job title text")->required();
    embed->add_option("--skills", embed_skills, "comma-separated skill list");
    embed->add_option("--mode", embed_mode, "title | skills | combined")->capture_default_str();

    // ---------------------------------------------------------------- index
    auto* index_cmd = app.add_subcommand("index", "build the normalized-title index");
    std::string index_ckpt, index_vocab, index_labels, index_benchmark, index_out;
    index_cmd->add_option("--checkpoint", index_ckpt, "model checkpoint")->required();
    index_cmd->add_option("--vocab", index_vocab, "vocabulary file")->required();
    index_cmd->add_option("--labels", index_labels, "label file, one normalized title per line");
    index_cmd->add_option("--benchmark", index_benchmark,
                          "take labels from this benchmark's normalized titles");
    index_cmd->add_option("--out", index_out, "index output path")->required();

    // --------------------------------------------------------------- search
    auto* search = app.add_subcommand("search", "top-K semantic search for a title");
    std::string search_ckpt, search_vocab, search_index, search_query, search_skills;
    int search_k = 10;
    bool search_force = false;
    search->add_option("--checkpoint", search_ckpt, "model checkpoint")->required();
    search->add_option("--vocab", search_vocab, "vocabulary file")->required();
    search->add_option("--index", search_index, "title index file")->required();
    search->add_option("--query", search_query, "free-form title query")->required();
    search->add_option("--skills", search_skills, "comma-separated skills: switch to combined mode");
    search->add_option("-k,--top-k", search_k, "number of results")->capture_default_str();
    search->add_flag("--force", search_force, "ignore checkpoint/index fingerprint mismatch");

    // ------------------------------------------------------------- evaluate
    auto* evaluate = app.add_subcommand("evaluate", "Recall@{1,5,10} over a benchmark");
    std::string eval_benchmark, eval_ckpt, eval_vocab, eval_modes = "title,combined";
    std::string eval_reference, eval_json_out, eval_table_out;
    int eval_k = 10;
    bool eval_baseline = false;
    std::uint64_t eval_baseline_seed = 0;
    evaluate->add_option("--benchmark", eval_benchmark, "benchmark JSONL with normalized titles")
        ->required();
    evaluate->add_option("--checkpoint", eval_ckpt, "model checkpoint")->required();
    evaluate->add_option("--vocab", eval_vocab, "vocabulary file")->required();
    evaluate->add_option("--modes", eval_modes, "comma-separated: title, skills, combined")
        ->capture_default_str();
    evaluate->add_option("--reference", eval_reference,
                         "external reference triple \"r1,r5,r10\" for the delta column");
    evaluate->add_option("--json-out", eval_json_out, "write the JSON report here");
    evaluate->add_option("--table-out", eval_table_out, "write the text table here");
    evaluate->add_option("-k,--top-k", eval_k, "retrieval depth")->capture_default_str();
    evaluate->add_flag("--baseline", eval_baseline, "include the random-static baseline");
    evaluate->add_option("--baseline-seed", eval_baseline_seed, "baseline table seed")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    if (synth->parsed()) {
        synth_config.synonym_variants = synth_synonyms ? 1 : 0;
        synth_config.ambiguous_pairs = synth_ambiguous ? 1 : 0;
        tn_corpus* corpus = nullptr;
        check(tn_corpus_synthesize(&synth_config, global.data_seed, &corpus));
        CorpusPtr guard(corpus, tn_corpus_free);
        check(tn_corpus_save_jsonl(corpus, synth_out.c_str()));
        size_t n = 0;
        tn_corpus_size(corpus, &n);
        say(global, "wrote " + std::to_string(n) + " records to " + synth_out);
        return kExitOk;
    }

    if (preprocess->parsed()) {
        const CorpusPtr raw = load_corpus(pre_in);
        tn_corpus* cleaned = nullptr;
        tn_preprocess_counts counts{};
        check(tn_corpus_preprocess(raw.get(), pre_gazetteer.c_str(),
                                   pre_cues.empty() ? nullptr : pre_cues.c_str(), &cleaned, &counts));
        CorpusPtr guard(cleaned, tn_corpus_free);
        check(tn_corpus_save_jsonl(cleaned, pre_out.c_str()));
        std::cout << "read " << counts.read << "\n"
                  << "kept " << counts.kept << "\n"
                  << "dropped-by-language " << counts.dropped_language << "\n"
                  << "dropped-empty " << counts.dropped_empty << "\n"
                  << "dropped-duplicate " << counts.dropped_duplicate << "\n";
        return kExitOk;
    }

    if (stats->parsed()) {
        const CorpusPtr corpus = load_corpus(stats_in);
        char* json = nullptr;
        check(tn_corpus_stats_json(corpus.get(), &json));
        const std::string text = json;
        tn_string_free(json);
        if (stats_out.empty()) {
            std::cout << text << "\n";
        } else {
            write_file(stats_out, text + "\n");
        }
        return kExitOk;
    }

    if (train_cmd->parsed()) {
        train_config.bidirectional = train_bidirectional ? 1 : 0;
        train_config.shuffle_seed = global.data_seed;
        encoder_config.init_seed = global.model_seed;

        const CorpusPtr corpus = load_corpus(train_corpus);

        VocabPtr vocab(nullptr, tn_vocab_free);
        if (!train_vocab_in.empty()) {
            vocab = load_vocab(train_vocab_in);
        } else {
            tn_vocab* built = nullptr;
            check(tn_vocab_build(corpus.get(), train_min_frequency, &built));
            vocab.reset(built);
        }
        std::string vocab_path = train_vocab_in;
        if (!train_vocab_out.empty()) {
            check(tn_vocab_save(vocab.get(), train_vocab_out.c_str()));
            vocab_path = train_vocab_out;
        }

        ModelPtr model(nullptr, tn_model_free);
        if (!train_resume.empty()) {
            model = load_model(train_resume);
        } else {
            tn_model* fresh = nullptr;
            check(tn_model_create(&encoder_config, vocab.get(), &fresh));
            model.reset(fresh);
        }

        check(tn_train(model.get(), vocab.get(), corpus.get(), &train_config,
                       train_log.empty() ? nullptr : train_log.c_str(),
                       train_config.checkpoint_every > 0 ? train_ckpt_out.c_str() : nullptr));
        check(tn_model_save(model.get(), train_ckpt_out.c_str(),
                            vocab_path.empty() ? nullptr : vocab_path.c_str()));

        if (!train_log.empty()) {
            // Final validation metrics are the last validation record.
            std::ifstream log_in(train_log);
            std::string line, last_validation;
            while (std::getline(log_in, line)) {
                if (line.find("\"type\":\"validation\"") != std::string::npos) last_validation = line;
            }
            if (!last_validation.empty()) say(global, "final validation: " + last_validation);
        }
        say(global, "checkpoint written to " + train_ckpt_out);
        return kExitOk;
    }

    if (embed->parsed()) {
        const ModelPtr model = load_model(embed_ckpt);
        const VocabPtr vocab = load_vocab(embed_vocab);
        const std::vector<std::string> skills = split_csv(embed_skills);
        std::vector<const char*> skill_ptrs;
        for (const auto& skill : skills) skill_ptrs.push_back(skill.c_str());

        int mode = TN_MODE_TITLE;
        if (embed_mode == "skills") mode = TN_MODE_SKILLS;
        else if (embed_mode == "combined") mode = TN_MODE_COMBINED;
        else if (embed_mode != "title") {
            std::cerr << "error: unknown mode " << embed_mode << "\n";
            return kExitUsage;
        }

        size_t dim = 0;
        check(tn_model_pooled_dim(model.get(), &dim));
        std::vector<float> values(dim);
        check(tn_model_embed(model.get(), vocab.get(), embed_title.c_str(),
                             skill_ptrs.empty() ? nullptr : skill_ptrs.data(), skill_ptrs.size(), mode,
                             values.data()));
        std::ostringstream out;
        for (size_t i = 0; i < values.size(); ++i) {
            if (i) out << ' ';
            out << values[i];
        }
        std::cout << out.str() << "\n";
        return kExitOk;
    }

    if (index_cmd->parsed()) {
        if (index_labels.empty() == index_benchmark.empty()) {
            std::cerr << "error: provide exactly one of --labels or --benchmark\n";
            return kExitUsage;
        }
        const ModelPtr model = load_model(index_ckpt);
        const VocabPtr vocab = load_vocab(index_vocab);

        std::string labels;
        if (!index_labels.empty()) {
            std::ifstream in(index_labels);
            if (!in) {
                std::cerr << "error: cannot open label file: " << index_labels << "\n";
                return kExitUsage;
            }
            std::stringstream buffer;
            buffer << in.rdbuf();
            labels = buffer.str();
        } else {
            tn_corpus* bench = nullptr;
            check(tn_corpus_load_benchmark(index_benchmark.c_str(), &bench));
            CorpusPtr guard(bench, tn_corpus_free);
            char* lines = nullptr;
            check(tn_corpus_labels(bench, &lines));
            labels = lines;
            tn_string_free(lines);
        }

        tn_index* built = nullptr;
        check(tn_index_build(model.get(), vocab.get(), labels.c_str(), &built));
        IndexPtr guard(built, tn_index_free);
        check(tn_index_save(built, index_out.c_str()));
        size_t n = 0;
        tn_index_size(built, &n);
        say(global, "indexed " + std::to_string(n) + " labels into " + index_out);
        return kExitOk;
    }

    if (search->parsed()) {
        const ModelPtr model = load_model(search_ckpt);
        const VocabPtr vocab = load_vocab(search_vocab);

        uint8_t fingerprint[TN_FINGERPRINT_SIZE];
        check(tn_model_fingerprint(model.get(), fingerprint));
        tn_index* loaded = nullptr;
        check(tn_index_load(search_index.c_str(), search_force ? nullptr : fingerprint,
                            search_force ? 1 : 0, &loaded));
        IndexPtr idx(loaded, tn_index_free);

        const std::vector<std::string> skills = split_csv(search_skills);
        std::vector<const char*> skill_ptrs;
        for (const auto& skill : skills) skill_ptrs.push_back(skill.c_str());
        const int mode = skill_ptrs.empty() ? TN_MODE_TITLE : TN_MODE_COMBINED;

        size_t dim = 0;
        check(tn_model_pooled_dim(model.get(), &dim));
        std::vector<float> query(dim);
        check(tn_model_embed(model.get(), vocab.get(), search_query.c_str(),
                             skill_ptrs.empty() ? nullptr : skill_ptrs.data(), skill_ptrs.size(), mode,
                             query.data()));

        std::vector<tn_search_hit> hits(static_cast<size_t>(search_k));
        size_t n_hits = 0;
        check(tn_index_query(idx.get(), query.data(), dim, static_cast<size_t>(search_k), hits.data(),
                             &n_hits));
        for (size_t i = 0; i < n_hits; ++i) {
            std::printf("%zu\t%.4f\t%s\n", i + 1, static_cast<double>(hits[i].score), hits[i].label);
        }
        return kExitOk;
    }

    if (evaluate->parsed()) {
        const ModelPtr model = load_model(eval_ckpt);
        const VocabPtr vocab = load_vocab(eval_vocab);
        tn_corpus* bench = nullptr;
        check(tn_corpus_load_benchmark(eval_benchmark.c_str(), &bench));
        const CorpusPtr benchmark(bench, tn_corpus_free);

        tn_eval_options options;
        tn_eval_options_default(&options);
        options.modes = 0;
        for (const std::string& mode : split_csv(eval_modes)) {
            if (mode == "title") options.modes |= TN_EVAL_MODE_TITLE;
            else if (mode == "skills") options.modes |= TN_EVAL_MODE_SKILLS;
            else if (mode == "combined") options.modes |= TN_EVAL_MODE_COMBINED;
            else {
                std::cerr << "error: unknown mode " << mode << "\n";
                return kExitUsage;
            }
        }
        options.top_k = eval_k;
        options.include_baseline = eval_baseline ? 1 : 0;
        options.baseline_seed = eval_baseline_seed;
        if (!eval_reference.empty()) {
            const auto parts = split_csv(eval_reference);
            if (parts.size() != 3) {
                std::cerr << "error: --reference needs exactly three comma-separated values\n";
                return kExitUsage;
            }
            options.have_reference = 1;
            options.reference_r1 = std::stod(parts[0]);
            options.reference_r5 = std::stod(parts[1]);
            options.reference_r10 = std::stod(parts[2]);
        }

        char* json = nullptr;
        char* table = nullptr;
        check(tn_evaluate(model.get(), vocab.get(), benchmark.get(), &options, &json, &table));
        const std::string json_text = json;
        const std::string table_text = table;
        tn_string_free(json);
        tn_string_free(table);

        if (!eval_json_out.empty()) write_file(eval_json_out, json_text + "\n");
        if (!eval_table_out.empty()) write_file(eval_table_out, table_text);
        std::cout << table_text;
        return kExitOk;
    }

    return kExitUsage;
}
