#pragma once

#include "titlenorm/corpus.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace titlenorm::corpus {

// Desk-scale stand-in for a scraped corpus: F title families, each with a
// unique normalized title, a disjoint skill pool and a set of lexical title
// variants. Records draw skills from their family pool, optionally
// contaminated with foreign skills at noise_rate.
struct SynthConfig {
    int families = 10;
    int skills_per_family = 8;
    int records_per_family = 20;
    int skills_per_record = 6;
    double noise_rate = 0.0;
    // Adds title variants with no lexical overlap with the normalized title
    // (per-family synonym words). Makes title-only retrieval non-trivial.
    bool synonym_variants = false;
    // Families are paired and each pair shares one identical title variant,
    // so titles alone cannot separate the pair but skills can.
    bool ambiguous_pairs = false;
    // The first N generated records get non-Latin (Cyrillic) text.
    int non_latin_count = 0;
};

struct SynthFamily {
    std::string normalized_title;
    std::string esco_code;
    std::vector<std::string> skill_pool;
    std::vector<std::string> title_variants;
};

// The deterministic family layout for a config; the generator and the test
// oracles both derive ground truth from it.
std::vector<SynthFamily> synth_plan(const SynthConfig& config);

std::vector<JobRecord> generate_synthetic(const SynthConfig& config, std::uint64_t seed);

// Union of all family skill pools, in plan order. Useful as a gazetteer.
std::vector<std::string> synth_gazetteer(const SynthConfig& config);

} // namespace titlenorm::corpus
