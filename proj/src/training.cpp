#include "titlenorm/training.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <deque>
#include <random>
#include <unordered_map>
#include <unordered_set>

using nlohmann::json;

namespace titlenorm::train {

namespace {

struct PreparedPair {
    BatchPair encoded;
    std::string dedup_key;
    std::string gold; // cleaned normalized title, may be empty
};

std::vector<PreparedPair> prepare_pairs(const std::vector<corpus::JobRecord>& dataset,
                                        const tok::Vocabulary& vocab) {
    std::vector<PreparedPair> pairs;
    pairs.reserve(dataset.size());
    for (const corpus::JobRecord& record : dataset) {
        if (record.skills.empty()) {
            raise(ErrorCode::invalid_argument,
                  "train: record with empty skills (title: " + record.title + ")");
        }
        PreparedPair pair;
        const std::string title = corpus::clean_text(record.title);
        pair.encoded.title = tok::encode_title(title, vocab);
        pair.encoded.skills = tok::encode_skills(record.skills, vocab);
        pair.gold = record.normalized_title ? corpus::clean_text(*record.normalized_title) : "";
        pair.dedup_key = pair.gold.empty() ? title : pair.gold;
        pairs.push_back(std::move(pair));
    }
    return pairs;
}

double validation_loss(const enc::Model& model, const std::vector<PreparedPair>& val,
                       const TrainConfig& config) {
    double total = 0.0;
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < val.size(); begin += static_cast<std::size_t>(config.batch_size)) {
        const std::size_t end = std::min(val.size(), begin + static_cast<std::size_t>(config.batch_size));
        if (end - begin < 2) continue; // a single pair scores 0 by construction
        const Eigen::Index b = static_cast<Eigen::Index>(end - begin);
        enc::MatX<float> titles(b, static_cast<Eigen::Index>(model.config.pooled_dim));
        enc::MatX<float> skills(b, static_cast<Eigen::Index>(model.config.pooled_dim));
        for (Eigen::Index i = 0; i < b; ++i) {
            const auto& pair = val[begin + static_cast<std::size_t>(i)].encoded;
            const auto th = enc::encoder_forward(model.config, model.params, pair.title);
            titles.row(i) = enc::pool_title(model.params, th, pair.title).transpose();
            const auto sh = enc::encoder_forward(model.config, model.params, pair.skills);
            skills.row(i) = enc::pool_skills(model.params, sh, pair.skills).transpose();
        }
        total += mnr_loss(enc::MatX<float>(titles * skills.transpose()), config.scale);
        ++batches;
    }
    return batches == 0 ? 0.0 : total / static_cast<double>(batches);
}

// Recall@1 of title-mode queries against the distinct gold labels of the
// validation slice, embedded with the current parameters.
std::pair<double, std::uint64_t> validation_recall1(const enc::Model& model,
                                                    const tok::Vocabulary& vocab,
                                                    const std::vector<PreparedPair>& val) {
    std::vector<std::string> labels;
    std::unordered_map<std::string, std::size_t> label_ids;
    for (const PreparedPair& pair : val) {
        if (pair.gold.empty()) continue;
        if (label_ids.emplace(pair.gold, labels.size()).second) labels.push_back(pair.gold);
    }
    if (labels.size() < 2) return {0.0, 0};

    enc::MatX<float> label_vectors(static_cast<Eigen::Index>(labels.size()),
                                   static_cast<Eigen::Index>(model.config.pooled_dim));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const enc::Embedding e = enc::embed_title(model, vocab, labels[i]);
        label_vectors.row(static_cast<Eigen::Index>(i)) =
            Eigen::Map<const Eigen::VectorXf>(e.values.data(), static_cast<Eigen::Index>(e.values.size()))
                .transpose();
    }

    std::uint64_t hits = 0;
    std::uint64_t probes = 0;
    for (const PreparedPair& pair : val) {
        if (pair.gold.empty()) continue;
        const auto th = enc::encoder_forward(model.config, model.params, pair.encoded.title);
        const enc::VecX<float> q = enc::pool_title(model.params, th, pair.encoded.title);
        Eigen::VectorXf scores = label_vectors * q;
        Eigen::Index best = 0;
        scores.maxCoeff(&best);
        if (labels[static_cast<std::size_t>(best)] == pair.gold) ++hits;
        ++probes;
    }
    return {probes == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(probes), probes};
}

} // namespace

std::string train_log_to_jsonl(const TrainLog& log) {
    std::string out;
    for (const StepLogEntry& entry : log.steps) {
        json line = {{"type", "step"},
                     {"step", entry.step},
                     {"loss", entry.loss},
                     {"batch_size", entry.batch_size},
                     {"wall_ms", entry.wall_ms}};
        out += line.dump();
        out += '\n';
    }
    for (const ValidationEntry& entry : log.validations) {
        json line = {{"type", "validation"},
                     {"step", entry.step},
                     {"loss", entry.loss},
                     {"recall1", entry.recall1},
                     {"probe_size", entry.probe_size}};
        out += line.dump();
        out += '\n';
    }
    return out;
}

TrainLog train(enc::Model& model, const std::vector<corpus::JobRecord>& dataset,
               const TrainConfig& config, const tok::Vocabulary& vocab,
               const std::function<void(std::int64_t)>& checkpoint_hook) {
    config.validate();
    if (dataset.size() < static_cast<std::size_t>(config.batch_size)) {
        raise(ErrorCode::invalid_argument,
              "train: dataset smaller than one batch (" + std::to_string(dataset.size()) + " < " +
                  std::to_string(config.batch_size) + ")");
    }

    std::vector<PreparedPair> pairs = prepare_pairs(dataset, vocab);

    // Seeded Fisher-Yates; raw rng words so the permutation is stable
    // across standard libraries.
    std::mt19937_64 rng(config.shuffle_seed);
    std::vector<std::size_t> order(pairs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        std::swap(order[i], order[i + static_cast<std::size_t>(rng() % (order.size() - i))]);
    }

    const std::size_t val_count =
        static_cast<std::size_t>(config.validation_fraction * static_cast<double>(pairs.size()));
    std::vector<PreparedPair> validation;
    std::vector<PreparedPair> pool;
    for (std::size_t i = 0; i < order.size(); ++i) {
        (i < val_count ? validation : pool).push_back(pairs[order[i]]);
    }
    if (pool.size() < static_cast<std::size_t>(config.batch_size)) {
        raise(ErrorCode::invalid_argument, "train: not enough pairs left after the validation split");
    }

    AdamState<float> state = make_adam_state(model.params);
    TrainLog log;
    std::int64_t step = 0;

    auto run_validation = [&] {
        ValidationEntry entry;
        entry.step = step;
        entry.loss = validation_loss(model, validation, config);
        const auto [recall, probes] = validation_recall1(model, vocab, validation);
        entry.recall1 = recall;
        entry.probe_size = probes;
        log.validations.push_back(entry);
    };

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::deque<PreparedPair> pending(pool.begin(), pool.end());
        if (epoch > 0) {
            // Fresh shuffle per epoch, still driven by the single seed stream.
            std::vector<PreparedPair> shuffled(pending.begin(), pending.end());
            for (std::size_t i = 0; i + 1 < shuffled.size(); ++i) {
                std::swap(shuffled[i], shuffled[i + static_cast<std::size_t>(rng() % (shuffled.size() - i))]);
            }
            pending.assign(shuffled.begin(), shuffled.end());
        }

        while (pending.size() >= static_cast<std::size_t>(config.batch_size)) {
            // Take a chunk of batch_size, keep the first pair per
            // normalized-title key and spill colliding positives to the tail
            // so they land in a later batch.
            std::vector<BatchPair> batch;
            std::vector<PreparedPair> spilled;
            std::unordered_set<std::string> keys;
            for (int i = 0; i < config.batch_size; ++i) {
                PreparedPair pair = std::move(pending.front());
                pending.pop_front();
                if (keys.insert(pair.dedup_key).second) {
                    batch.push_back(pair.encoded);
                } else {
                    spilled.push_back(std::move(pair));
                }
            }
            for (PreparedPair& pair : spilled) pending.push_back(std::move(pair));

            const auto start = std::chrono::steady_clock::now();
            BackwardResult<float> result;
            try {
                result = backward_batch(model.config, model.params, batch, config);
            } catch (const Error& e) {
                if (e.code() == ErrorCode::numeric_failure) {
                    raise(ErrorCode::numeric_failure,
                          "train: non-finite gradient at step " + std::to_string(step + 1));
                }
                throw;
            }
            optimizer_step(model.params, result.grads, state, config);
            if (!enc::all_finite(model.params)) {
                raise(ErrorCode::numeric_failure,
                      "train: non-finite parameters after step " + std::to_string(step + 1));
            }
            ++step;
            const auto stop = std::chrono::steady_clock::now();

            StepLogEntry entry;
            entry.step = step;
            entry.loss = result.loss;
            entry.batch_size = batch.size();
            entry.wall_ms = std::chrono::duration<double, std::milli>(stop - start).count();
            log.steps.push_back(entry);

            if (config.checkpoint_every > 0 && step % config.checkpoint_every == 0) {
                run_validation();
                if (checkpoint_hook) checkpoint_hook(step);
            }
        }
    }

    run_validation();
    if (checkpoint_hook) checkpoint_hook(step);
    return log;
}

} // namespace titlenorm::train
