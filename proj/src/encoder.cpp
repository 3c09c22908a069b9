#include "titlenorm/encoder.hpp"

#include <algorithm>

namespace titlenorm::enc {

std::string embed_mode_name(EmbedMode mode) {
    switch (mode) {
        case EmbedMode::title: return "title";
        case EmbedMode::skills: return "skills";
        case EmbedMode::combined: return "combined";
    }
    return "title";
}

EmbedMode embed_mode_from_name(const std::string& name) {
    if (name == "title") return EmbedMode::title;
    if (name == "skills") return EmbedMode::skills;
    if (name == "combined") return EmbedMode::combined;
    raise(ErrorCode::invalid_argument, "unknown embedding mode: " + name);
}

std::size_t parameter_count(const EncoderConfig& c) {
    const std::size_t d = c.hidden_dim;
    const std::size_t ffn = c.ffn_dim;
    const std::size_t embeddings = c.vocab_size * d + c.max_positions * d + 2 * d;
    const std::size_t attention = 4 * (d * d + d);
    const std::size_t feed_forward = d * ffn + ffn + ffn * d + d;
    const std::size_t layer_norms = 4 * d;
    const std::size_t per_layer = attention + feed_forward + layer_norms;
    const std::size_t pooling = c.pooled_dim * d + c.pooled_dim;
    return embeddings + c.num_layers * per_layer + pooling;
}

Model make_model(const EncoderConfig& config) {
    config.validate();
    return Model{config, init_params<float>(config)};
}

namespace {

Embedding to_embedding(const VecX<float>& unit, EmbedMode mode) {
    Embedding e;
    e.values.assign(unit.data(), unit.data() + unit.size());
    e.mode = mode;
    e.normalized = true;
    return e;
}

} // namespace

Embedding combine_embeddings(const Embedding& title, const Embedding& skills) {
    if (title.values.size() != skills.values.size())
        raise(ErrorCode::invalid_argument, "combine_embeddings: dimension mismatch");
    if (!title.normalized || !skills.normalized)
        raise(ErrorCode::invalid_argument, "combine_embeddings: inputs must be unit-norm");
    Eigen::Map<const Eigen::VectorXf> va(title.values.data(), static_cast<Eigen::Index>(title.values.size()));
    Eigen::Map<const Eigen::VectorXf> vb(skills.values.data(), static_cast<Eigen::Index>(skills.values.size()));
    Eigen::VectorXf mean = 0.5f * (va + vb);
    const float norm = mean.norm();
    if (!(norm > 0.0f)) raise(ErrorCode::numeric_failure, "combined embedding collapsed to zero");
    mean /= norm;
    Embedding e;
    e.values.assign(mean.data(), mean.data() + mean.size());
    e.mode = EmbedMode::combined;
    e.normalized = true;
    return e;
}

Embedding embed_title(const Model& model, const tok::Vocabulary& vocab, const std::string& title) {
    const tok::EncodedInput input = tok::encode_title(title, vocab);
    const MatX<float> hidden = encoder_forward(model.config, model.params, input);
    return to_embedding(pool_title(model.params, hidden, input), EmbedMode::title);
}

Embedding embed_skills(const Model& model, const tok::Vocabulary& vocab,
                       const std::vector<std::string>& skills) {
    const tok::EncodedInput input = tok::encode_skills(skills, vocab);
    const MatX<float> hidden = encoder_forward(model.config, model.params, input);
    return to_embedding(pool_skills(model.params, hidden, input), EmbedMode::skills);
}

Embedding embed_record(const Model& model, const tok::Vocabulary& vocab,
                       const corpus::JobRecord& record, EmbedMode mode) {
    switch (mode) {
        case EmbedMode::title:
            return embed_title(model, vocab, record.title);
        case EmbedMode::skills:
            return embed_skills(model, vocab, record.skills);
        case EmbedMode::combined: {
            if (record.skills.empty()) {
                // Fallback: combined inference without skills is title inference.
                Embedding e = embed_title(model, vocab, record.title);
                e.mode = EmbedMode::combined;
                return e;
            }
            const Embedding title = embed_title(model, vocab, record.title);
            const Embedding skills = embed_skills(model, vocab, record.skills);
            return combine_embeddings(title, skills);
        }
    }
    raise(ErrorCode::invalid_argument, "embed_record: bad mode");
}

StaticTable make_static_table(std::size_t vocab_size, std::uint32_t dim, std::uint64_t seed) {
    if (vocab_size == 0 || dim == 0) raise(ErrorCode::invalid_argument, "static table: empty shape");
    StaticTable table;
    table.rows.resize(static_cast<Eigen::Index>(vocab_size), static_cast<Eigen::Index>(dim));
    InitRng rng(seed);
    for (Eigen::Index c = 0; c < table.rows.cols(); ++c)
        for (Eigen::Index r = 0; r < table.rows.rows(); ++r)
            table.rows(r, c) = static_cast<float>(rng.truncated_normal(0.02));
    return table;
}

Embedding static_embed(const StaticTable& table, const tok::Vocabulary& vocab,
                       const corpus::JobRecord& record, EmbedMode mode) {
    std::vector<tok::TokenId> ids;
    auto add_words = [&](const std::string& text) {
        std::string word;
        for (char ch : text + " ") {
            if (ch == ' ' || ch == '\t') {
                if (!word.empty()) ids.push_back(vocab.id_of(word));
                word.clear();
            } else {
                word.push_back(ch);
            }
        }
    };
    if (mode == EmbedMode::title || mode == EmbedMode::combined) add_words(record.title);
    if (mode == EmbedMode::skills || mode == EmbedMode::combined) {
        for (const std::string& skill : record.skills) add_words(skill);
    }
    if (ids.empty()) ids.push_back(tok::kUnk);

    // Sorted accumulation: word order can never change the floating-point sum.
    std::sort(ids.begin(), ids.end());
    Eigen::VectorXf sum = Eigen::VectorXf::Zero(table.rows.cols());
    for (tok::TokenId id : ids) {
        const Eigen::Index row = id < table.rows.rows() ? static_cast<Eigen::Index>(id)
                                                        : static_cast<Eigen::Index>(tok::kUnk);
        sum += table.rows.row(row).transpose();
    }
    Eigen::VectorXf mean = sum / static_cast<float>(ids.size());
    const float norm = mean.norm();
    if (norm > 0.0f) mean /= norm;
    Embedding e;
    e.values.assign(mean.data(), mean.data() + mean.size());
    e.mode = mode;
    e.normalized = true;
    return e;
}

} // namespace titlenorm::enc
