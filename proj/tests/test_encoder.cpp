#include <doctest.h>

#include "helpers.hpp"
#include "titlenorm/encoder.hpp"
#include "titlenorm/error.hpp"
#include "titlenorm/tokenizer.hpp"

#include <cmath>
#include <random>

using namespace titlenorm;
using enc::EncoderConfig;

namespace {

EncoderConfig tiny_config(std::uint32_t vocab_size = 16, std::uint64_t seed = 5) {
    EncoderConfig c;
    c.vocab_size = vocab_size;
    c.hidden_dim = 8;
    c.num_layers = 1;
    c.num_heads = 2;
    c.ffn_dim = 16;
    c.max_positions = 128;
    c.pooled_dim = 4;
    c.init_seed = seed;
    return c;
}

tok::EncodedInput raw_input(std::vector<tok::TokenId> ids, std::vector<std::size_t> skill_positions = {}) {
    tok::EncodedInput input;
    input.ids = std::move(ids);
    input.mask.assign(input.ids.size(), 1);
    input.skill_positions = std::move(skill_positions);
    input.mode = input.skill_positions.empty() ? tok::Mode::title : tok::Mode::skills;
    return input;
}

} // namespace

TEST_CASE("init_params is deterministic and shaped per contract") {
    EncoderConfig config;
    config.vocab_size = 100;
    config.init_seed = 42;

    const auto a = enc::init_params<float>(config);
    const auto b = enc::init_params<float>(config);
    bool identical = true;
    enc::visit_params(a, [&](const std::string& name, enc::TensorKind, const auto& ta) {
        enc::visit_params(b, [&](const std::string& name_b, enc::TensorKind, const auto& tb) {
            if (name == name_b && ta.size() == tb.size()) {
                if (std::memcmp(ta.data(), tb.data(), sizeof(float) * static_cast<std::size_t>(ta.size())) != 0)
                    identical = false;
            }
        });
    });
    CHECK(identical);

    // d=64, p=32: the shared pooling weight is (32, 64).
    CHECK(a.pool_w.rows() == 32);
    CHECK(a.pool_w.cols() == 64);
    CHECK(a.tok_emb.rows() == 100);
    CHECK(a.tok_emb.cols() == 64);
    CHECK(enc::all_finite(a));

    CHECK_THROWS_AS(enc::init_params<float>(EncoderConfig{}), Error); // vocab_size 0
}

TEST_CASE("initializer statistics: near-zero sample mean") {
    EncoderConfig config;
    config.vocab_size = 2000; // 2000 * 64 = 128k draws
    config.init_seed = 7;
    const auto params = enc::init_params<float>(config);
    const double mean = static_cast<double>(params.tok_emb.sum()) / static_cast<double>(params.tok_emb.size());
    CHECK(mean > -0.005);
    CHECK(mean < 0.005);
    CHECK(params.tok_emb.cwiseAbs().maxCoeff() <= 0.04f + 1e-6f); // truncation at 2 sigma
}

TEST_CASE("parameter count matches the analytic formula (single Siamese set)") {
    EncoderConfig config;
    config.vocab_size = 100;
    const auto params = enc::init_params<float>(config);
    CHECK(enc::parameter_count(params) == enc::parameter_count(config));

    const auto tiny = tiny_config();
    const auto tiny_params = enc::init_params<float>(tiny);
    // vocab*d + pos*d + 2d + L*(4(d^2+d) + 4d + d*ffn + ffn + ffn*d + d) + p*d + p
    const std::size_t expected = 16 * 8 + 128 * 8 + 2 * 8 +
                                 1 * (4 * (64 + 8) + 4 * 8 + 8 * 16 + 16 + 16 * 8 + 8) + 4 * 8 + 4;
    CHECK(enc::parameter_count(tiny_params) == expected);
}

TEST_CASE("forward returns one hidden row per position, deterministically") {
    const auto config = tiny_config();
    const auto params = enc::init_params<float>(config);
    const auto input = raw_input({tok::kCls, 7, 9, 5, tok::kSep});

    const auto h1 = enc::encoder_forward(config, params, input);
    CHECK(h1.rows() == 5);
    CHECK(h1.cols() == 8);
    CHECK(h1.allFinite());

    const auto h2 = enc::encoder_forward(config, params, input);
    CHECK(std::memcmp(h1.data(), h2.data(), sizeof(float) * static_cast<std::size_t>(h1.size())) == 0);

    CHECK_THROWS_AS(enc::encoder_forward(config, params, raw_input({99})), Error);
    std::vector<tok::TokenId> too_long(200, 5);
    CHECK_THROWS_AS(enc::encoder_forward(config, params, raw_input(too_long)), Error);
}

TEST_CASE("padding never changes real-position hidden states or pooled outputs") {
    const auto config = tiny_config();
    const auto params = enc::init_params<float>(config);

    auto input = raw_input({tok::kCls, 7, tok::kSkill, 9, 5, tok::kSep}, {2});
    const auto bare = enc::encoder_forward(config, params, input);
    const auto pooled_title = enc::pool_title(params, bare, input);
    const auto pooled_skills = enc::pool_skills(params, bare, input);

    auto padded = input;
    tok::pad_to(padded, 32);
    const auto with_pad = enc::encoder_forward(config, params, padded);
    for (Eigen::Index i = 0; i < bare.rows(); ++i) {
        CHECK((bare.row(i) - with_pad.row(i)).cwiseAbs().maxCoeff() <= 1e-5f);
    }
    const auto padded_title = enc::pool_title(params, with_pad, padded);
    const auto padded_skills = enc::pool_skills(params, with_pad, padded);
    CHECK((pooled_title - padded_title).cwiseAbs().maxCoeff() <= 1e-5f);
    CHECK((pooled_skills - padded_skills).cwiseAbs().maxCoeff() <= 1e-5f);
}

TEST_CASE("degenerate config reduces to per-position layer norms") {
    const auto config = tiny_config();
    auto params = enc::init_params<float>(config);
    // Kill the mixing paths: value/output projections and the whole FFN.
    for (auto& layer : params.layers) {
        layer.wv.setZero();
        layer.bv.setZero();
        layer.wo.setZero();
        layer.bo.setZero();
        layer.w1.setZero();
        layer.b1.setZero();
        layer.w2.setZero();
        layer.b2.setZero();
    }

    const auto input = raw_input({tok::kCls, 7, 9, tok::kSep});
    const auto hidden = enc::encoder_forward(config, params, input);

    auto reference_ln = [](Eigen::VectorXf row) {
        const float mean = row.mean();
        const float var = (row.array() - mean).square().mean();
        return ((row.array() - mean) / std::sqrt(var + 1e-5f)).matrix().eval();
    };
    for (Eigen::Index i = 0; i < hidden.rows(); ++i) {
        Eigen::VectorXf emb =
            params.tok_emb.row(static_cast<Eigen::Index>(input.ids[static_cast<std::size_t>(i)])).transpose() +
            params.pos_emb.row(i).transpose();
        Eigen::VectorXf expected = reference_ln(reference_ln(reference_ln(emb)));
        CHECK((hidden.row(i).transpose() - expected).cwiseAbs().maxCoeff() <= 1e-5f);
    }
}

TEST_CASE("pool_title matches a brute-force mean oracle") {
    const auto config = tiny_config();
    const auto params = enc::init_params<float>(config);
    const auto input = raw_input({tok::kCls, 6, 7, 8, tok::kSep});
    const auto hidden = enc::encoder_forward(config, params, input);

    const auto pooled = enc::pool_title(params, hidden, input);
    CHECK(std::abs(pooled.norm() - 1.0f) <= 1e-6f);

    // Oracle: explicit sum / count over the non-special masked positions.
    Eigen::VectorXf sum = Eigen::VectorXf::Zero(8);
    for (Eigen::Index i : {1, 2, 3}) sum += hidden.row(i).transpose();
    Eigen::VectorXf mean = sum / 3.0f;
    Eigen::VectorXf projected = params.pool_w * mean + params.pool_b;
    projected /= projected.norm();
    CHECK((pooled - projected).cwiseAbs().maxCoeff() <= 1e-6f);
}

TEST_CASE("pool_title falls back to CLS for inputs with no real words") {
    const auto config = tiny_config();
    const auto params = enc::init_params<float>(config);
    const auto input = raw_input({tok::kCls, tok::kSep});
    const auto hidden = enc::encoder_forward(config, params, input);
    const auto pooled = enc::pool_title(params, hidden, input);

    Eigen::VectorXf expected = params.pool_w * hidden.row(0).transpose() + params.pool_b;
    expected /= expected.norm();
    CHECK((pooled - expected).cwiseAbs().maxCoeff() <= 1e-6f);

    tok::EncodedInput all_masked_out;
    all_masked_out.ids = {tok::kCls, tok::kSep};
    all_masked_out.mask = {0, 0};
    CHECK_THROWS_AS(enc::pool_title(params, hidden, all_masked_out), Error);
}

TEST_CASE("pool_skills definition on hand-set hidden rows") {
    const auto config = tiny_config();
    const auto params = enc::init_params<float>(config);

    std::mt19937_64 rng(11);
    enc::MatX<float> hidden(5, 8);
    for (Eigen::Index i = 0; i < hidden.rows(); ++i)
        for (Eigen::Index j = 0; j < hidden.cols(); ++j)
            hidden(i, j) = static_cast<float>(testutil::unit(rng) - 0.5);

    auto input = raw_input({tok::kCls, tok::kSkill, 7, tok::kSkill, 8}, {1, 3});

    // Two positions: normalize(W (v1+v2)/2 + b).
    const auto pooled = enc::pool_skills(params, hidden, input);
    Eigen::VectorXf mean = 0.5f * (hidden.row(1).transpose() + hidden.row(3).transpose());
    Eigen::VectorXf expected = params.pool_w * mean + params.pool_b;
    expected /= expected.norm();
    CHECK((pooled - expected).cwiseAbs().maxCoeff() <= 1e-6f);

    // One position: normalize(W h + b).
    auto single = raw_input({tok::kCls, tok::kSkill, 7}, {1});
    const enc::MatX<float> hidden_top = hidden.topRows(3);
    const auto pooled_one = enc::pool_skills(params, hidden_top, single);
    Eigen::VectorXf expected_one = params.pool_w * hidden.row(1).transpose() + params.pool_b;
    expected_one /= expected_one.norm();
    CHECK((pooled_one - expected_one).cwiseAbs().maxCoeff() <= 1e-6f);

    // Mean idempotence: k equal rows pool to the same embedding as one row.
    enc::MatX<float> equal_rows(5, 8);
    for (Eigen::Index i = 0; i < 5; ++i) equal_rows.row(i) = hidden.row(1);
    auto many = raw_input({tok::kCls, tok::kSkill, tok::kSkill, tok::kSkill, tok::kSkill}, {1, 2, 3, 4});
    const auto pooled_many = enc::pool_skills(params, equal_rows, many);
    CHECK((pooled_many - pooled_one).cwiseAbs().maxCoeff() <= 1e-6f);

    // Errors: no positions / bad positions.
    auto empty = raw_input({tok::kCls, 7});
    CHECK_THROWS_AS(enc::pool_skills(params, hidden, empty), Error);
    auto bad = raw_input({tok::kCls, 7, 8}, {1}); // id at 1 is not [SKILL]
    CHECK_THROWS_AS(enc::pool_skills(params, hidden, bad), Error);
}

TEST_CASE("Siamese sharing: one parameter set feeds both branches") {
    const auto config = tiny_config();
    auto params = enc::init_params<float>(config);
    const auto input = raw_input({tok::kCls, 7, tok::kSkill, 9, tok::kSep}, {2});

    auto hidden = enc::encoder_forward(config, params, input);
    const auto title_before = enc::pool_title(params, hidden, input);
    const auto skills_before = enc::pool_skills(params, hidden, input);

    params.pool_w(0, 0) += 0.5f;
    hidden = enc::encoder_forward(config, params, input);
    const auto title_after = enc::pool_title(params, hidden, input);
    const auto skills_after = enc::pool_skills(params, hidden, input);
    CHECK((title_before - title_after).cwiseAbs().maxCoeff() > 0.0f);
    CHECK((skills_before - skills_after).cwiseAbs().maxCoeff() > 0.0f);

    params.layers[0].wq(2, 3) += 0.8f;
    hidden = enc::encoder_forward(config, params, input);
    CHECK((enc::pool_title(params, hidden, input) - title_after).cwiseAbs().maxCoeff() > 0.0f);
    CHECK((enc::pool_skills(params, hidden, input) - skills_after).cwiseAbs().maxCoeff() > 0.0f);
}

TEST_CASE("unit norm holds for random inputs") {
    const auto config = tiny_config();
    const auto params = enc::init_params<float>(config);
    std::mt19937_64 rng(19);
    for (int iter = 0; iter < 50; ++iter) {
        std::vector<tok::TokenId> ids = {tok::kCls};
        std::vector<std::size_t> positions;
        const std::size_t words = 1 + testutil::pick(rng, 10);
        for (std::size_t w = 0; w < words; ++w) {
            if (testutil::unit(rng) < 0.4) {
                positions.push_back(ids.size());
                ids.push_back(tok::kSkill);
            }
            ids.push_back(static_cast<tok::TokenId>(5 + testutil::pick(rng, 11)));
        }
        ids.push_back(tok::kSep);
        auto input = raw_input(ids, positions);
        const auto hidden = enc::encoder_forward(config, params, input);
        CHECK(std::abs(enc::pool_title(params, hidden, input).norm() - 1.0f) <= 1e-6f);
        if (!positions.empty()) {
            CHECK(std::abs(enc::pool_skills(params, hidden, input).norm() - 1.0f) <= 1e-6f);
        }
    }
}

TEST_CASE("combine_embeddings closed forms") {
    enc::Embedding a;
    a.values = {1.0f, 0.0f, 0.0f, 0.0f};
    a.normalized = true;
    enc::Embedding b = a;

    const auto same = enc::combine_embeddings(a, b);
    CHECK(same.values == a.values);

    enc::Embedding ortho;
    ortho.values = {0.0f, 1.0f, 0.0f, 0.0f};
    ortho.normalized = true;
    const auto mixed = enc::combine_embeddings(a, ortho);
    const float inv_sqrt2 = 1.0f / std::sqrt(2.0f);
    CHECK(mixed.values[0] == doctest::Approx(inv_sqrt2).epsilon(1e-6));
    CHECK(mixed.values[1] == doctest::Approx(inv_sqrt2).epsilon(1e-6));
    CHECK(mixed.values[2] == doctest::Approx(0.0f));
    CHECK(mixed.mode == enc::EmbedMode::combined);
}

TEST_CASE("embed_record modes and the combined fallback") {
    const auto vocab = tok::Vocabulary::build({"senior developer sql python"}, 1);
    auto config = tiny_config(static_cast<std::uint32_t>(vocab.size()));
    const enc::Model model{config, enc::init_params<float>(config)};

    corpus::JobRecord record;
    record.title = "senior developer";
    record.skills = {"sql", "python"};

    const auto title = enc::embed_record(model, vocab, record, enc::EmbedMode::title);
    const auto skills = enc::embed_record(model, vocab, record, enc::EmbedMode::skills);
    const auto combined = enc::embed_record(model, vocab, record, enc::EmbedMode::combined);
    CHECK(title.mode == enc::EmbedMode::title);
    CHECK(skills.mode == enc::EmbedMode::skills);
    const auto expected = enc::combine_embeddings(title, skills);
    CHECK(combined.values == expected.values);

    corpus::JobRecord no_skills = record;
    no_skills.skills.clear();
    const auto fallback = enc::embed_record(model, vocab, no_skills, enc::EmbedMode::combined);
    CHECK(fallback.values == title.values);
    CHECK(fallback.mode == enc::EmbedMode::combined);
    CHECK_THROWS_AS(enc::embed_record(model, vocab, no_skills, enc::EmbedMode::skills), Error);
}

TEST_CASE("static baseline embedding: oracle, permutation invariance") {
    const auto vocab = tok::Vocabulary::build({"alpha beta gamma delta"}, 1);
    const auto table = enc::make_static_table(vocab.size(), 16, 3);

    corpus::JobRecord one_word;
    one_word.title = "alpha";
    const auto e = enc::static_embed(table, vocab, one_word, enc::EmbedMode::title);
    Eigen::VectorXf expected = table.rows.row(vocab.id_of("alpha")).transpose();
    expected /= expected.norm();
    for (std::size_t i = 0; i < e.values.size(); ++i) {
        CHECK(e.values[i] == doctest::Approx(expected(static_cast<Eigen::Index>(i))).epsilon(1e-6));
    }

    corpus::JobRecord fwd, rev;
    fwd.title = "alpha beta gamma";
    rev.title = "gamma alpha beta";
    const auto ef = enc::static_embed(table, vocab, fwd, enc::EmbedMode::title);
    const auto er = enc::static_embed(table, vocab, rev, enc::EmbedMode::title);
    CHECK(ef.values == er.values); // exact, not approximate

    // Brute-force mean oracle.
    corpus::JobRecord multi;
    multi.title = "alpha beta";
    multi.skills = {"gamma delta", "alpha"};
    const auto ec = enc::static_embed(table, vocab, multi, enc::EmbedMode::combined);
    Eigen::VectorXf sum = Eigen::VectorXf::Zero(16);
    for (const char* word : {"alpha", "beta", "gamma", "delta", "alpha"}) {
        sum += table.rows.row(vocab.id_of(word)).transpose();
    }
    Eigen::VectorXf mean = sum / 5.0f;
    mean /= mean.norm();
    for (std::size_t i = 0; i < ec.values.size(); ++i) {
        CHECK(ec.values[i] == doctest::Approx(mean(static_cast<Eigen::Index>(i))).epsilon(1e-5));
    }
}
