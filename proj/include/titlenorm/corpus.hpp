#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace titlenorm::corpus {

enum class Source { vacancy, resume, benchmark, synthetic };

std::string source_name(Source s);
Source source_from_name(const std::string& name);

// One job posting (raw, preprocessed or benchmark).
struct JobRecord {
    std::string title;
    std::string description;
    std::vector<std::string> skills;
    std::optional<std::string> normalized_title;
    std::optional<std::string> esco_code; // first digit names the occupation family
    Source source = Source::vacancy;

    bool operator==(const JobRecord&) const = default;
};

struct CorpusStats {
    std::uint64_t total_records = 0;
    std::map<char, std::uint64_t> records_per_esco_family; // keyed by first code digit
    std::uint64_t skills_lt_10 = 0;
    std::uint64_t skills_10_to_100 = 0;
    std::uint64_t skills_gt_100 = 0;
    std::uint64_t unique_titles = 0;
};

// Lowercases, strips URLs / emails / phone numbers, collapses whitespace.
// Total and idempotent: clean_text(clean_text(x)) == clean_text(x).
std::string clean_text(const std::string& raw);

// Drops sentences that match a boilerplate cue (benefits, perks, EEO blurbs).
// Expects cleaned text; sentences are split on `.?!;` followed by whitespace.
std::string filter_relevant_sentences(const std::string& description);
std::string filter_relevant_sentences(const std::string& description,
                                      const std::vector<std::string>& cues);

// The compiled-in cue list used when no override file is supplied.
const std::vector<std::string>& default_section_cues();
std::vector<std::string> load_cue_file(const std::string& path);

// Longest-match, non-overlapping gazetteer scan over word-aligned spans.
// Matches are returned in order of first appearance, deduplicated.
std::vector<std::string> extract_skills(const std::string& description,
                                        const std::vector<std::string>& gazetteer);

std::vector<std::string> load_gazetteer(const std::string& path);

// Coarse English gate: >= 90 % of letters in the ASCII range and at least
// three stopword occurrences.
bool is_target_language(const std::string& text);

struct LoadReport {
    std::uint64_t lines_read = 0;
    std::uint64_t malformed = 0;
    std::uint64_t skipped_invariant = 0; // failed JobRecord invariants
    std::uint64_t missing_normalized = 0;
};

// JSONL corpus IO. Keys: title, description, skills, normalized_title,
// esco_code, source. Unknown keys are ignored; malformed lines are skipped
// (fatal only when more than half the file is malformed).
std::vector<JobRecord> load_jsonl(const std::string& path, LoadReport* report = nullptr);
void write_jsonl(const std::vector<JobRecord>& records, const std::string& path);

// load_jsonl restricted to records carrying a normalized title.
std::vector<JobRecord> load_benchmark(const std::string& path, LoadReport* report = nullptr);

CorpusStats compute_stats(const std::vector<JobRecord>& records);
std::string stats_to_json(const CorpusStats& stats);

struct PreprocessCounts {
    std::uint64_t read = 0;
    std::uint64_t kept = 0;
    std::uint64_t dropped_language = 0;
    std::uint64_t dropped_empty = 0;
    std::uint64_t dropped_duplicate = 0;
};

// Full cleaning pipeline: clean_text -> language gate -> sentence filter ->
// gazetteer skill extraction -> dedup by (clean title, sorted skills).
std::vector<JobRecord> preprocess(const std::vector<JobRecord>& raw,
                                  const std::vector<std::string>& gazetteer,
                                  const std::vector<std::string>& cues,
                                  PreprocessCounts* counts = nullptr);

} // namespace titlenorm::corpus
