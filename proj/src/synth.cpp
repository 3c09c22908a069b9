#include "titlenorm/synth.hpp"
#include "titlenorm/error.hpp"

#include <algorithm>
#include <random>
#include <unordered_set>

namespace titlenorm::corpus {

namespace {

const std::vector<std::string> kDomains = {
    "software", "data",    "network",  "marketing", "finance", "sales",
    "product",  "security", "cloud",   "research",  "supply",  "health",
    "legal",    "retail",   "energy",  "media",
};
const std::vector<std::string> kDomainSynonyms = {
    "application", "information", "infrastructure", "promotion", "accounting", "commerce",
    "portfolio",   "protection",  "hosting",        "discovery", "logistics",  "care",
    "compliance",  "merchandise", "utility",        "broadcast",
};
const std::vector<std::string> kRoles = {
    "engineer",  "analyst",   "manager",      "designer", "technician", "scientist",
    "developer", "architect", "administrator", "consultant", "planner",  "auditor",
    "specialist", "coordinator", "operator",   "strategist",
};
const std::vector<std::string> kRoleSynonyms = {
    "builder",   "examiner",  "supervisor", "stylist",  "mechanic",  "researcher",
    "programmer", "drafter",  "steward",    "advisor",  "scheduler", "inspector",
    "expert",     "organizer", "handler",   "tactician",
};
const std::vector<std::string> kSkillNouns = {
    "modeling", "pipelines", "testing",  "deployment", "analysis",  "automation",
    "reporting", "tuning",   "budgeting", "forecasting", "auditing", "monitoring",
    "integration", "migration", "scripting", "visualization",
};
const std::vector<std::string> kPairWords = {
    "alpha", "beta", "gamma", "delta", "epsilon", "zeta", "eta", "theta",
    "iota",  "kappa", "lambda", "mu",  "nu",      "xi",   "omicron", "pi",
};

const std::vector<std::string> kCyrillicTitles = {
    "старший розробник програмного забезпечення",
    "молодший аналітик даних",
    "керівник відділу маркетингу",
    "інженер з мережевої безпеки",
};
const std::vector<std::string> kCyrillicDescriptions = {
    "потрібен досвід роботи та знання сучасних технологій для цієї посади.",
    "компанія шукає відповідального фахівця з досвідом роботи у галузі.",
};

std::string pick_word(const std::vector<std::string>& words, int i) {
    std::string word = words[static_cast<std::size_t>(i) % words.size()];
    const int round = i / static_cast<int>(words.size());
    if (round > 0) word += std::to_string(round + 1);
    return word;
}

void validate(const SynthConfig& c) {
    if (c.families < 2) raise(ErrorCode::invalid_argument, "synth: need at least 2 families");
    if (c.skills_per_family < 4) raise(ErrorCode::invalid_argument, "synth: need at least 4 skills per family");
    if (c.records_per_family < 1) raise(ErrorCode::invalid_argument, "synth: need at least 1 record per family");
    if (c.skills_per_record < 1 || c.skills_per_record > c.skills_per_family)
        raise(ErrorCode::invalid_argument, "synth: skills_per_record out of range");
    if (c.noise_rate < 0.0 || c.noise_rate >= 1.0)
        raise(ErrorCode::invalid_argument, "synth: noise_rate must be in [0, 1)");
    if (c.non_latin_count < 0) raise(ErrorCode::invalid_argument, "synth: non_latin_count negative");
}

// Uniform draws that do not depend on libstdc++ distribution internals, so
// equal seeds give byte-identical corpora.
std::size_t pick_index(std::mt19937_64& rng, std::size_t n) { return rng() % n; }
double pick_unit(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
}

} // namespace

std::vector<SynthFamily> synth_plan(const SynthConfig& config) {
    validate(config);
    std::vector<SynthFamily> families;
    families.reserve(static_cast<std::size_t>(config.families));
    for (int f = 0; f < config.families; ++f) {
        SynthFamily family;
        const std::string domain = pick_word(kDomains, f);
        const std::string role = pick_word(kRoles, f);
        family.normalized_title = domain + " " + role;
        family.esco_code = std::to_string(f % 10) + std::to_string(f / 10 % 10) +
                           std::to_string(f % 7) + std::to_string(f % 3);
        for (int s = 0; s < config.skills_per_family; ++s) {
            family.skill_pool.push_back(domain + " " + pick_word(kSkillNouns, s));
        }
        family.title_variants = {
            family.normalized_title,
            "senior " + family.normalized_title,
            "junior " + family.normalized_title,
            "lead " + family.normalized_title,
            family.normalized_title + " ii",
        };
        if (config.synonym_variants) {
            const std::string alias = pick_word(kDomainSynonyms, f) + " " + pick_word(kRoleSynonyms, f);
            family.title_variants.push_back(alias);
            family.title_variants.push_back("senior " + alias);
        }
        if (config.ambiguous_pairs) {
            // Both members of a pair use the same literal variant.
            family.title_variants.push_back(pick_word(kPairWords, f / 2) + " division specialist");
        }
        families.push_back(std::move(family));
    }
    return families;
}

std::vector<std::string> synth_gazetteer(const SynthConfig& config) {
    std::vector<std::string> entries;
    for (const SynthFamily& family : synth_plan(config)) {
        entries.insert(entries.end(), family.skill_pool.begin(), family.skill_pool.end());
    }
    return entries;
}

std::vector<JobRecord> generate_synthetic(const SynthConfig& config, std::uint64_t seed) {
    const std::vector<SynthFamily> plan = synth_plan(config);
    std::mt19937_64 rng(seed);
    std::vector<JobRecord> records;
    records.reserve(static_cast<std::size_t>(config.families) *
                    static_cast<std::size_t>(config.records_per_family));

    int emitted = 0;
    for (int f = 0; f < config.families; ++f) {
        const SynthFamily& family = plan[static_cast<std::size_t>(f)];
        for (int r = 0; r < config.records_per_family; ++r, ++emitted) {
            JobRecord record;
            record.source = Source::synthetic;
            record.normalized_title = family.normalized_title;
            record.esco_code = family.esco_code;
            record.title = family.title_variants[pick_index(rng, family.title_variants.size())];

            // Draw a distinct subset of the family pool, then contaminate.
            std::vector<std::size_t> order(family.skill_pool.size());
            for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
            for (std::size_t i = 0; i + 1 < order.size(); ++i) {
                std::swap(order[i], order[i + pick_index(rng, order.size() - i)]);
            }
            std::vector<std::string> skills;
            std::unordered_set<std::string> seen;
            for (int k = 0; k < config.skills_per_record; ++k) {
                std::string skill = family.skill_pool[order[static_cast<std::size_t>(k)]];
                if (config.noise_rate > 0.0 && pick_unit(rng) < config.noise_rate) {
                    std::size_t foreign = pick_index(rng, plan.size() - 1);
                    if (foreign >= static_cast<std::size_t>(f)) ++foreign;
                    const auto& pool = plan[foreign].skill_pool;
                    skill = pool[pick_index(rng, pool.size())];
                }
                if (seen.insert(skill).second) skills.push_back(std::move(skill));
            }
            record.skills = std::move(skills);

            std::string listing;
            for (std::size_t i = 0; i < record.skills.size(); ++i) {
                if (i > 0) listing += (i + 1 == record.skills.size()) ? " and " : ", ";
                listing += record.skills[i];
            }
            record.description =
                "for this role the position requires the following skills: " + listing + ".";
            if (pick_unit(rng) < 0.3) {
                record.description += " we offer free lunch and a gym membership.";
            }

            if (emitted < config.non_latin_count) {
                record.title = kCyrillicTitles[static_cast<std::size_t>(emitted) % kCyrillicTitles.size()];
                record.description =
                    kCyrillicDescriptions[static_cast<std::size_t>(emitted) % kCyrillicDescriptions.size()];
            }
            records.push_back(std::move(record));
        }
    }
    return records;
}

} // namespace titlenorm::corpus
