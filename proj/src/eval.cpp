#include "titlenorm/eval.hpp"
#include "titlenorm/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <iomanip>
#include <sstream>
#include <unordered_map>

using nlohmann::json;

namespace titlenorm::eval {

double recall_at_n(const std::vector<std::pair<std::uint32_t, index::SearchResult>>& queries,
                   std::size_t n) {
    if (n == 0) raise(ErrorCode::invalid_argument, "recall_at_n: N must be >= 1");
    if (queries.empty()) raise(ErrorCode::invalid_argument, "recall_at_n: empty query set");
    std::uint64_t hits = 0;
    for (const auto& [gold, result] : queries) {
        const std::size_t limit = std::min(n, result.ranked.size());
        for (std::size_t i = 0; i < limit; ++i) {
            if (result.ranked[i].label_id == gold) {
                ++hits;
                break;
            }
        }
    }
    return static_cast<double>(hits) / static_cast<double>(queries.size());
}

EvalOutcome evaluate(const std::vector<corpus::JobRecord>& records, const RecordEmbedder& embed,
                     enc::EmbedMode mode, const index::TitleIndex& index, std::size_t k) {
    EvalOutcome outcome;
    std::vector<std::pair<std::uint32_t, index::SearchResult>> queries;
    for (const corpus::JobRecord& record : records) {
        if (!record.normalized_title) {
            ++outcome.excluded;
            continue;
        }
        const std::string gold_label = corpus::clean_text(*record.normalized_title);
        const std::optional<std::uint32_t> gold = index.id_of(gold_label);
        if (!gold) {
            ++outcome.excluded;
            continue;
        }
        queries.emplace_back(*gold, index::query(index, embed(record, mode), k));
    }
    if (queries.empty()) raise(ErrorCode::invalid_argument, "evaluate: no resolvable records");
    outcome.resolvable = queries.size();
    outcome.recall.r1 = recall_at_n(queries, 1);
    outcome.recall.r5 = recall_at_n(queries, 5);
    outcome.recall.r10 = recall_at_n(queries, 10);
    return outcome;
}

double delta_improvement(const RecallTriple& candidate, const RecallTriple& reference) {
    if (reference.r1 <= 0.0 || reference.r5 <= 0.0 || reference.r10 <= 0.0)
        raise(ErrorCode::invalid_argument, "delta_improvement: reference components must be positive");
    const double d1 = (candidate.r1 - reference.r1) / reference.r1;
    const double d5 = (candidate.r5 - reference.r5) / reference.r5;
    const double d10 = (candidate.r10 - reference.r10) / reference.r10;
    return (d1 + d5 + d10) / 3.0 * 100.0;
}

EvalReport compare_encoders(const std::vector<corpus::JobRecord>& benchmark,
                            const std::vector<EncoderSpec>& encoders,
                            const std::vector<enc::EmbedMode>& modes,
                            const std::vector<std::string>& labels,
                            const std::optional<RecallTriple>& external_reference,
                            const std::string& reference_name, std::size_t k) {
    if (encoders.empty()) raise(ErrorCode::invalid_argument, "compare_encoders: no encoders");
    if (modes.empty()) raise(ErrorCode::invalid_argument, "compare_encoders: no modes");

    EvalReport report;
    report.record_count = benchmark.size();
    report.stats = corpus::compute_stats(benchmark);
    report.config_echo["top_k"] = std::to_string(k);
    report.config_echo["label_count"] = std::to_string(labels.size());

    for (const EncoderSpec& spec : encoders) {
        const index::TitleIndex index = spec.build_index(labels);
        for (enc::EmbedMode mode : modes) {
            const EvalOutcome outcome = evaluate(benchmark, spec.embed, mode, index, k);
            ResultRow row;
            row.encoder = spec.name;
            row.mode = mode;
            row.recall = outcome.recall;
            row.resolvable = outcome.resolvable;
            row.excluded = outcome.excluded;
            report.results.push_back(std::move(row));
        }
    }

    if (external_reference) {
        for (const ResultRow& row : report.results) {
            DeltaRow delta;
            delta.candidate = row.encoder + ":" + enc::embed_mode_name(row.mode);
            delta.reference = reference_name;
            delta.percent = delta_improvement(row.recall, *external_reference);
            report.deltas.push_back(std::move(delta));
        }
    }
    return report;
}

std::string report_to_json(const EvalReport& report) {
    json stats_json = json::parse(corpus::stats_to_json(report.stats));
    json results = json::array();
    for (const ResultRow& row : report.results) {
        results.push_back({{"encoder", row.encoder},
                           {"mode", enc::embed_mode_name(row.mode)},
                           {"recall", {{"r1", row.recall.r1}, {"r5", row.recall.r5}, {"r10", row.recall.r10}}},
                           {"resolvable", row.resolvable},
                           {"excluded", row.excluded}});
    }
    json deltas = json::array();
    for (const DeltaRow& row : report.deltas) {
        deltas.push_back({{"candidate", row.candidate}, {"reference", row.reference}, {"percent", row.percent}});
    }
    json config = json::object();
    for (const auto& [key, value] : report.config_echo) config[key] = value;
    json out = {
        {"dataset", {{"records", report.record_count}, {"stats", stats_json}}},
        {"results", results},
        {"deltas", deltas},
        {"config", config},
    };
    return out.dump(2);
}

std::string report_to_table(const EvalReport& report) {
    std::size_t name_width = std::string("Model").size();
    std::vector<std::pair<std::string, const ResultRow*>> rows;
    for (const ResultRow& row : report.results) {
        std::string name = row.encoder + " (" + enc::embed_mode_name(row.mode) + ")";
        name_width = std::max(name_width, name.size());
        rows.emplace_back(std::move(name), &row);
    }

    std::ostringstream out;
    out << std::left << std::setw(static_cast<int>(name_width + 2)) << "Model" << std::right
        << std::setw(10) << "Recall@1" << std::setw(10) << "Recall@5" << std::setw(10) << "Recall@10"
        << std::setw(10) << "Excluded" << '\n';
    out << std::string(name_width + 2 + 40, '-') << '\n';
    out << std::fixed << std::setprecision(3);
    for (const auto& [name, row] : rows) {
        out << std::left << std::setw(static_cast<int>(name_width + 2)) << name << std::right
            << std::setw(10) << row->recall.r1 << std::setw(10) << row->recall.r5 << std::setw(10)
            << row->recall.r10 << std::setw(10) << row->excluded << '\n';
    }
    if (!report.deltas.empty()) {
        out << '\n';
        out << std::setprecision(2);
        for (const DeltaRow& delta : report.deltas) {
            out << "delta " << delta.candidate << " vs " << delta.reference << ": " << delta.percent
                << "%\n";
        }
    }
    return out.str();
}

} // namespace titlenorm::eval
