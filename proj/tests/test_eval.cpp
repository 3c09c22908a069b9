#include <doctest.h>

#include "helpers.hpp"
#include "titlenorm/checkpoint.hpp"
#include "titlenorm/error.hpp"
#include "titlenorm/eval.hpp"
#include "titlenorm/synth.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <random>

using namespace titlenorm;
using eval::RecallTriple;

namespace {

index::SearchResult result_with_gold_at(std::uint32_t gold, std::size_t rank, std::size_t length) {
    index::SearchResult result;
    std::uint32_t filler = 1000;
    for (std::size_t i = 0; i < length; ++i) {
        index::SearchHit hit;
        hit.label_id = (i + 1 == rank) ? gold : filler++;
        hit.score = 1.0f - 0.01f * static_cast<float>(i);
        result.ranked.push_back(hit);
    }
    return result;
}

} // namespace

TEST_CASE("recall_at_n counts gold hits in the top N") {
    std::vector<std::pair<std::uint32_t, index::SearchResult>> queries;
    queries.emplace_back(7, result_with_gold_at(7, 1, 12));
    CHECK(eval::recall_at_n(queries, 1) == 1.0);

    queries.clear();
    for (std::size_t rank : {1, 3, 7, 12}) {
        queries.emplace_back(5, result_with_gold_at(5, rank, 12));
    }
    CHECK(eval::recall_at_n(queries, 1) == 0.25);
    CHECK(eval::recall_at_n(queries, 5) == 0.5);
    CHECK(eval::recall_at_n(queries, 10) == 0.75);

    // Gold absent entirely.
    queries.clear();
    queries.emplace_back(99, result_with_gold_at(5, 1, 10));
    CHECK(eval::recall_at_n(queries, 10) == 0.0);

    CHECK_THROWS_AS(eval::recall_at_n({}, 1), Error);
    CHECK_THROWS_AS(eval::recall_at_n(queries, 0), Error);
}

TEST_CASE("recall is monotone in N and invariant to query order") {
    std::mt19937_64 rng(3);
    for (int iter = 0; iter < 50; ++iter) {
        std::vector<std::pair<std::uint32_t, index::SearchResult>> queries;
        const std::size_t n = 1 + testutil::pick(rng, 20);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t rank = 1 + testutil::pick(rng, 15); // may exceed list length
            queries.emplace_back(3, result_with_gold_at(3, rank, 12));
        }
        double previous = 0.0;
        for (std::size_t k = 1; k <= 12; ++k) {
            const double r = eval::recall_at_n(queries, k);
            CHECK(r >= previous);
            CHECK(r >= 0.0);
            CHECK(r <= 1.0);
            previous = r;
        }
        auto shuffled = queries;
        for (std::size_t i = 0; i + 1 < shuffled.size(); ++i)
            std::swap(shuffled[i], shuffled[i + testutil::pick(rng, shuffled.size() - i)]);
        CHECK(eval::recall_at_n(shuffled, 5) == eval::recall_at_n(queries, 5));
    }
}

TEST_CASE("delta_improvement reproduces the published comparison rows") {
    const RecallTriple reference{0.225, 0.386, 0.46};
    const RecallTriple without_skills{0.271, 0.402, 0.489};
    const RecallTriple with_skills{0.301, 0.425, 0.556};

    CHECK(eval::delta_improvement(without_skills, reference) == doctest::Approx(10.30).epsilon(0.005));
    CHECK(eval::delta_improvement(with_skills, reference) == doctest::Approx(21.58).epsilon(0.005));
    CHECK(eval::delta_improvement(reference, reference) == 0.0);

    // Strictly increasing in every candidate component.
    for (int component = 0; component < 3; ++component) {
        RecallTriple bumped = without_skills;
        (component == 0 ? bumped.r1 : component == 1 ? bumped.r5 : bumped.r10) += 0.01;
        CHECK(eval::delta_improvement(bumped, reference) >
              eval::delta_improvement(without_skills, reference));
    }

    CHECK_THROWS_AS(eval::delta_improvement(with_skills, RecallTriple{0.0, 0.4, 0.5}), Error);
}

TEST_CASE("evaluate scores self-retrieval perfectly and accounts exclusions") {
    const std::vector<std::string> labels = {"data engineer", "sales manager", "support clerk"};
    const auto vocab = tok::Vocabulary::build({"data engineer sales manager support clerk"}, 1);
    enc::EncoderConfig config;
    config.vocab_size = static_cast<std::uint32_t>(vocab.size());
    config.hidden_dim = 16;
    config.num_layers = 1;
    config.num_heads = 2;
    config.ffn_dim = 32;
    config.pooled_dim = 8;
    config.init_seed = 31;
    const enc::Model model = enc::make_model(config);
    const auto idx = index::build_index(labels, model, vocab);

    const eval::RecordEmbedder embed = [&](const corpus::JobRecord& record, enc::EmbedMode mode) {
        return enc::embed_record(model, vocab, record, mode);
    };

    std::vector<corpus::JobRecord> records;
    for (const auto& label : labels) {
        corpus::JobRecord r;
        r.title = label;
        r.normalized_title = label;
        records.push_back(std::move(r));
    }
    corpus::JobRecord unresolvable;
    unresolvable.title = "data engineer";
    unresolvable.normalized_title = "astronaut"; // not in the index
    records.push_back(unresolvable);

    const auto outcome = eval::evaluate(records, embed, enc::EmbedMode::title, idx);
    CHECK(outcome.recall.r1 == 1.0);
    CHECK(outcome.recall.r5 == 1.0);
    CHECK(outcome.recall.r10 == 1.0);
    CHECK(outcome.resolvable == 3);
    CHECK(outcome.excluded == 1);
    CHECK(outcome.resolvable + outcome.excluded == records.size());

    // Combined mode on empty-skill records equals title mode.
    const auto combined = eval::evaluate(records, embed, enc::EmbedMode::combined, idx);
    CHECK(combined.recall.r1 == outcome.recall.r1);

    std::vector<corpus::JobRecord> hopeless = {unresolvable};
    CHECK_THROWS_AS(eval::evaluate(hopeless, embed, enc::EmbedMode::title, idx), Error);
}

TEST_CASE("compare_encoders builds per-encoder indexes and emits deltas") {
    corpus::SynthConfig sc;
    sc.families = 4;
    sc.skills_per_family = 6;
    sc.records_per_family = 6;
    sc.skills_per_record = 4;
    const auto records = corpus::generate_synthetic(sc, 3);

    std::vector<std::string> texts;
    std::vector<std::string> labels;
    for (const auto& r : records) {
        texts.push_back(corpus::clean_text(r.title));
        for (const auto& s : r.skills) texts.push_back(s);
        const std::string gold = corpus::clean_text(*r.normalized_title);
        if (std::find(labels.begin(), labels.end(), gold) == labels.end()) labels.push_back(gold);
    }
    const auto vocab = tok::Vocabulary::build(texts, 1);

    enc::EncoderConfig config;
    config.vocab_size = static_cast<std::uint32_t>(vocab.size());
    config.hidden_dim = 16;
    config.num_layers = 1;
    config.num_heads = 2;
    config.ffn_dim = 32;
    config.pooled_dim = 8;
    config.init_seed = 41;
    const enc::Model model = enc::make_model(config);

    eval::EncoderSpec transformer;
    transformer.name = "dual-encoder";
    transformer.embed = [&](const corpus::JobRecord& record, enc::EmbedMode mode) {
        return enc::embed_record(model, vocab, record, mode);
    };
    transformer.build_index = [&](const std::vector<std::string>& ls) {
        return index::build_index(ls, model, vocab);
    };

    SUBCASE("single encoder, single mode: one row, no deltas") {
        const auto report =
            eval::compare_encoders(records, {transformer}, {enc::EmbedMode::title}, labels);
        CHECK(report.results.size() == 1);
        CHECK(report.deltas.empty());
        CHECK(report.record_count == records.size());
        CHECK(report.results[0].resolvable + report.results[0].excluded == records.size());
    }

    SUBCASE("external reference adds one delta per row; json round trips") {
        const auto report = eval::compare_encoders(
            records, {transformer}, {enc::EmbedMode::title, enc::EmbedMode::combined}, labels,
            RecallTriple{0.225, 0.386, 0.46}, "published-reference");
        CHECK(report.results.size() == 2);
        CHECK(report.deltas.size() == 2);

        const auto parsed = nlohmann::json::parse(eval::report_to_json(report));
        CHECK(parsed["dataset"]["records"] == records.size());
        CHECK(parsed["results"].size() == 2);
        CHECK(parsed["results"][0]["encoder"] == "dual-encoder");
        CHECK(parsed["results"][0]["recall"].contains("r1"));
        CHECK(parsed["deltas"][0]["reference"] == "published-reference");

        const std::string table = eval::report_to_table(report);
        CHECK(table.find("Recall@1") != std::string::npos);
        CHECK(table.find("dual-encoder (title)") != std::string::npos);

        // Determinism: rebuilding the report yields identical serializations.
        const auto report2 = eval::compare_encoders(
            records, {transformer}, {enc::EmbedMode::title, enc::EmbedMode::combined}, labels,
            RecallTriple{0.225, 0.386, 0.46}, "published-reference");
        CHECK(eval::report_to_json(report2) == eval::report_to_json(report));
        CHECK(eval::report_to_table(report2) == table);
    }
}
