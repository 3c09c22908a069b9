#include <doctest.h>

#include "helpers.hpp"
#include "titlenorm/checkpoint.hpp"
#include "titlenorm/error.hpp"
#include "titlenorm/index.hpp"
#include "titlenorm/tokenizer.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>

using namespace titlenorm;

namespace {

enc::Model tiny_model(const tok::Vocabulary& vocab, std::uint64_t seed = 2) {
    enc::EncoderConfig config;
    config.vocab_size = static_cast<std::uint32_t>(vocab.size());
    config.hidden_dim = 16;
    config.num_layers = 1;
    config.num_heads = 2;
    config.ffn_dim = 32;
    config.pooled_dim = 8;
    config.init_seed = seed;
    return enc::make_model(config);
}

// Index of n random unit vectors, plus a matching brute-force score oracle.
index::TitleIndex random_index(std::size_t n, std::uint32_t dim, std::mt19937_64& rng) {
    Eigen::MatrixXf vectors(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::uint32_t j = 0; j < dim; ++j)
            vectors(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                static_cast<float>(testutil::unit(rng) - 0.5);
        vectors.row(static_cast<Eigen::Index>(i)) /= vectors.row(static_cast<Eigen::Index>(i)).norm();
        labels.push_back("label " + std::to_string(i));
    }
    return index::TitleIndex(std::move(labels), std::move(vectors), digest::Sha256{});
}

std::vector<float> random_unit(std::uint32_t dim, std::mt19937_64& rng) {
    Eigen::VectorXf v(static_cast<Eigen::Index>(dim));
    for (std::uint32_t j = 0; j < dim; ++j)
        v(static_cast<Eigen::Index>(j)) = static_cast<float>(testutil::unit(rng) - 0.5);
    v /= v.norm();
    return std::vector<float>(v.data(), v.data() + v.size());
}

// Full stable sort by (score desc, id asc); the exactness reference.
std::vector<std::uint32_t> brute_force_ranking(const index::TitleIndex& idx, const std::vector<float>& q) {
    Eigen::Map<const Eigen::VectorXf> qv(q.data(), static_cast<Eigen::Index>(q.size()));
    const Eigen::VectorXf scores = idx.vectors() * qv;
    std::vector<std::uint32_t> ids(idx.size());
    std::iota(ids.begin(), ids.end(), 0u);
    std::sort(ids.begin(), ids.end(), [&](std::uint32_t a, std::uint32_t b) {
        const float sa = scores(static_cast<Eigen::Index>(a));
        const float sb = scores(static_cast<Eigen::Index>(b));
        if (sa != sb) return sa > sb;
        return a < b;
    });
    return ids;
}

} // namespace

TEST_CASE("build_index assigns dense ids in input order") {
    const auto vocab = tok::Vocabulary::build({"data engineer sales manager support clerk"}, 1);
    const auto model = tiny_model(vocab);
    const std::vector<std::string> labels = {"Data Engineer", "sales manager", "support clerk"};

    const auto idx = index::build_index(labels, model, vocab);
    REQUIRE(idx.size() == 3);
    CHECK(idx.label(0) == "data engineer"); // cleaned
    CHECK(idx.label(1) == "sales manager");
    CHECK(idx.label(2) == "support clerk");
    CHECK(idx.id_of("sales manager").value() == 1);
    CHECK(idx.dimension() == 8);
    CHECK(idx.fingerprint() == ckpt::model_fingerprint(model));

    // Index vectors equal the title-mode embedding of each label.
    const auto direct = enc::embed_title(model, vocab, "sales manager");
    for (std::size_t i = 0; i < direct.values.size(); ++i) {
        CHECK(idx.vectors()(1, static_cast<Eigen::Index>(i)) == direct.values[i]);
    }

    // Build determinism.
    const auto again = index::build_index(labels, model, vocab);
    CHECK(again.vectors() == idx.vectors());

    CHECK_THROWS_AS(index::build_index({}, model, vocab), Error);
    CHECK_THROWS_AS(index::build_index({"dup", "DUP"}, model, vocab), Error);
}

TEST_CASE("query returns the query itself first and respects K") {
    std::mt19937_64 rng(6);
    const auto idx = random_index(20, 8, rng);

    const Eigen::VectorXf row3 = idx.vectors().row(3).transpose();
    const std::vector<float> q(row3.data(), row3.data() + row3.size());
    const auto result = index::query(idx, q, 5);
    REQUIRE(result.ranked.size() == 5);
    CHECK(result.ranked[0].label_id == 3);
    CHECK(result.ranked[0].score == doctest::Approx(1.0f).epsilon(1e-6));

    const auto all = index::query(idx, q, 100);
    CHECK(all.ranked.size() == 20); // K > n returns all n

    CHECK_THROWS_AS(index::query(idx, q, 0), Error);
    CHECK_THROWS_AS(index::query(idx, std::vector<float>(3, 0.5f), 5), Error);
    std::vector<float> not_unit(8, 0.9f);
    CHECK_THROWS_AS(index::query(idx, not_unit, 5), Error);
}

TEST_CASE("query equals the brute-force oracle on random instances") {
    std::mt19937_64 rng(7);
    for (int iter = 0; iter < 60; ++iter) {
        const std::size_t n = 1 + testutil::pick(rng, 500);
        const auto idx = random_index(n, 8, rng);
        const auto q = random_unit(8, rng);
        const auto oracle = brute_force_ranking(idx, q);
        for (std::size_t k : {std::size_t{1}, std::size_t{5}, std::size_t{10}}) {
            const auto result = index::query(idx, q, k);
            REQUIRE(result.ranked.size() == std::min(k, n));
            for (std::size_t i = 0; i < result.ranked.size(); ++i) {
                CHECK(result.ranked[i].label_id == oracle[i]);
            }
            // Scores are non-increasing and hits unique.
            for (std::size_t i = 1; i < result.ranked.size(); ++i) {
                CHECK(result.ranked[i].score <= result.ranked[i - 1].score);
                CHECK(result.ranked[i].label_id != result.ranked[i - 1].label_id);
            }
        }
    }
}

TEST_CASE("top-K lists are prefixes of top-(K+1) lists") {
    std::mt19937_64 rng(17);
    const auto idx = random_index(64, 8, rng);
    for (int iter = 0; iter < 20; ++iter) {
        const auto q = random_unit(8, rng);
        for (std::size_t k = 1; k < 12; ++k) {
            const auto small = index::query(idx, q, k);
            const auto big = index::query(idx, q, k + 1);
            REQUIRE(big.ranked.size() == small.ranked.size() + 1);
            for (std::size_t i = 0; i < small.ranked.size(); ++i) {
                CHECK(small.ranked[i].label_id == big.ranked[i].label_id);
            }
        }
    }
}

TEST_CASE("ranking is invariant to positive rescaling of the query") {
    std::mt19937_64 rng(23);
    const auto idx = random_index(100, 8, rng);
    for (int iter = 0; iter < 20; ++iter) {
        const auto q = random_unit(8, rng);
        for (float c : {0.25f, 4.0f}) {
            Eigen::Map<const Eigen::VectorXf> qv(q.data(), 8);
            Eigen::VectorXf scaled = qv * c;
            scaled /= scaled.norm(); // renormalized per the query contract
            const std::vector<float> q2(scaled.data(), scaled.data() + scaled.size());
            const auto a = index::query(idx, q, 10);
            const auto b = index::query(idx, q2, 10);
            REQUIRE(a.ranked.size() == b.ranked.size());
            for (std::size_t i = 0; i < a.ranked.size(); ++i) {
                CHECK(a.ranked[i].label_id == b.ranked[i].label_id);
            }
        }
    }
}

TEST_CASE("exact ties break by ascending label id") {
    Eigen::MatrixXf vectors(3, 2);
    vectors << 1.0f, 0.0f, // id 0
        0.0f, 1.0f,        // id 1: same score as id 2 for diagonal query
        0.0f, 1.0f;        // id 2 (duplicate vector)
    index::TitleIndex idx({"a", "b", "c"}, vectors, digest::Sha256{});
    const float inv_sqrt2 = 1.0f / std::sqrt(2.0f);
    const auto result = index::query(idx, {inv_sqrt2, inv_sqrt2}, 3);
    REQUIRE(result.ranked.size() == 3);
    CHECK(result.ranked[0].label_id == 1); // ties at rank 1-2: ids ascending
    CHECK(result.ranked[1].label_id == 2);
    CHECK(result.ranked[2].label_id == 0);
}

TEST_CASE("index file round trip preserves every field") {
    testutil::TempDir dir;
    std::mt19937_64 rng(29);
    const auto idx = random_index(12, 8, rng);
    const std::string path = dir.file("titles.idx");
    index::save_index(idx, path);

    const auto loaded = index::load_index(path);
    CHECK(loaded.size() == idx.size());
    CHECK(loaded.dimension() == idx.dimension());
    CHECK(loaded.fingerprint() == idx.fingerprint());
    for (std::uint32_t i = 0; i < idx.size(); ++i) CHECK(loaded.label(i) == idx.label(i));
    CHECK(loaded.vectors() == idx.vectors());
}

TEST_CASE("index load refuses mismatches unless forced") {
    testutil::TempDir dir;
    std::mt19937_64 rng(31);
    const auto idx = random_index(5, 8, rng);
    const std::string path = dir.file("titles.idx");
    index::save_index(idx, path);

    digest::Sha256 other{};
    other[0] = 0xAB;
    CHECK_THROWS_AS(index::load_index(path, other), Error);
    CHECK_THROWS_AS(index::load_index(path, std::nullopt, 16), Error);
    // Force overrides both checks.
    const auto forced = index::load_index(path, other, 16, true);
    CHECK(forced.size() == 5);

    // Truncation never yields a partial index.
    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    const std::string cut = dir.file("cut.idx");
    std::ofstream out(cut, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 7));
    out.close();
    CHECK_THROWS_AS(index::load_index(cut), Error);

    CHECK_THROWS_AS(index::load_index(dir.file("missing.idx")), Error);
}
