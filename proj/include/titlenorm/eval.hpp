#pragma once

#include "titlenorm/corpus.hpp"
#include "titlenorm/encoder.hpp"
#include "titlenorm/index.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace titlenorm::eval {

struct RecallTriple {
    double r1 = 0.0;
    double r5 = 0.0;
    double r10 = 0.0;
};

// Fraction of queries whose gold label id appears in the first N hits.
double recall_at_n(const std::vector<std::pair<std::uint32_t, index::SearchResult>>& queries,
                   std::size_t n);

using RecordEmbedder = std::function<enc::Embedding(const corpus::JobRecord&, enc::EmbedMode)>;

struct EvalOutcome {
    RecallTriple recall;
    std::uint64_t resolvable = 0;
    std::uint64_t excluded = 0; // gold label absent from the index
};

// Embeds every benchmark record in the given mode, queries top-K and scores
// Recall@{1,5,10}. Records whose gold normalized title is not in the index
// are excluded and counted, not scored as misses.
EvalOutcome evaluate(const std::vector<corpus::JobRecord>& records, const RecordEmbedder& embed,
                     enc::EmbedMode mode, const index::TitleIndex& index, std::size_t k = 10);

// Mean relative Recall@N gain over N in {1, 5, 10}, in percent.
double delta_improvement(const RecallTriple& candidate, const RecallTriple& reference);

struct EncoderSpec {
    std::string name;
    RecordEmbedder embed;
    // Builds this encoder's own index over the shared label set.
    std::function<index::TitleIndex(const std::vector<std::string>&)> build_index;
};

struct ResultRow {
    std::string encoder;
    enc::EmbedMode mode = enc::EmbedMode::title;
    RecallTriple recall;
    std::uint64_t resolvable = 0;
    std::uint64_t excluded = 0;
};

struct DeltaRow {
    std::string candidate;
    std::string reference;
    double percent = 0.0;
};

struct EvalReport {
    std::uint64_t record_count = 0;
    corpus::CorpusStats stats;
    std::vector<ResultRow> results;
    std::vector<DeltaRow> deltas;
    std::map<std::string, std::string> config_echo;
};

// One RecallTriple per (encoder, mode); every row is also compared against
// the external reference triple when one is supplied.
EvalReport compare_encoders(const std::vector<corpus::JobRecord>& benchmark,
                            const std::vector<EncoderSpec>& encoders,
                            const std::vector<enc::EmbedMode>& modes,
                            const std::vector<std::string>& labels,
                            const std::optional<RecallTriple>& external_reference = std::nullopt,
                            const std::string& reference_name = "reference", std::size_t k = 10);

std::string report_to_json(const EvalReport& report);
std::string report_to_table(const EvalReport& report);

} // namespace titlenorm::eval
