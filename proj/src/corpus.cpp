#include "titlenorm/corpus.hpp"
#include "titlenorm/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

using nlohmann::json;

namespace titlenorm::corpus {

std::string source_name(Source s) {
    switch (s) {
        case Source::vacancy: return "vacancy";
        case Source::resume: return "resume";
        case Source::benchmark: return "benchmark";
        case Source::synthetic: return "synthetic";
    }
    return "vacancy";
}

Source source_from_name(const std::string& name) {
    if (name == "vacancy") return Source::vacancy;
    if (name == "resume") return Source::resume;
    if (name == "benchmark") return Source::benchmark;
    if (name == "synthetic") return Source::synthetic;
    raise(ErrorCode::parse_failure, "unknown source value: " + name);
}

namespace {

const std::regex& url_pattern() {
    // scheme or www token through the next whitespace
    static const std::regex re(R"((https?://|www\.)\S+)");
    return re;
}

const std::regex& email_pattern() {
    static const std::regex re(R"(\S+@\S+\.\S+)");
    return re;
}

const std::regex& phone_pattern() {
    // 7+ digits allowing the separators + ( ) - . space
    static const std::regex re(R"(\+?\(?\d(?:[\s().-]*\d){6,}\)?)");
    return re;
}

std::string collapse_whitespace(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    bool in_space = false;
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            in_space = true;
            continue;
        }
        if (in_space && !out.empty()) out.push_back(' ');
        in_space = false;
        out.push_back(c);
    }
    return out;
}

} // namespace

std::string clean_text(const std::string& raw) {
    std::string text = raw;
    for (char& c : text) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));

    // Removing one pattern can join fragments into a new match (an email
    // stripped from between two digit groups leaves a phone-shaped run), so
    // iterate the removals to a fixed point. Each pass shrinks the string,
    // which bounds the loop.
    for (;;) {
        std::string next = std::regex_replace(text, url_pattern(), " ");
        next = std::regex_replace(next, email_pattern(), " ");
        next = std::regex_replace(next, phone_pattern(), " ");
        if (next == text) break;
        text = std::move(next);
    }
    return collapse_whitespace(text);
}

namespace {

std::vector<std::string> split_sentences(const std::string& text) {
    std::vector<std::string> sentences;
    std::size_t start = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        bool terminator = (c == '.' || c == '?' || c == '!' || c == ';');
        bool at_break = terminator &&
                        (i + 1 == text.size() ||
                         std::isspace(static_cast<unsigned char>(text[i + 1])));
        if (at_break) {
            sentences.push_back(text.substr(start, i - start + 1));
            start = i + 1;
            while (start < text.size() && std::isspace(static_cast<unsigned char>(text[start]))) ++start;
            i = start == 0 ? i : start - 1;
        }
    }
    if (start < text.size()) sentences.push_back(text.substr(start));
    return sentences;
}

} // namespace

const std::vector<std::string>& default_section_cues() {
    static const std::vector<std::string> cues = {
        "we offer",
        "we provide",
        "benefits include",
        "benefits package",
        "perks",
        "free lunch",
        "free snacks",
        "gym membership",
        "competitive salary",
        "competitive compensation",
        "paid time off",
        "health insurance",
        "dental",
        "401k",
        "pension plan",
        "equal opportunity",
        "eeo",
        "about us",
        "about the company",
        "our company",
        "our mission",
        "our team is",
        "join our family",
        "apply now",
        "apply today",
        "click here",
        "visit our website",
        "company culture",
        "work-life balance",
        "flexible hours",
        "stock options",
        "signing bonus",
        "relocation assistance",
    };
    return cues;
}

std::vector<std::string> load_cue_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(ErrorCode::io_failure, "cannot open cue file: " + path);
    std::vector<std::string> cues;
    std::string line;
    while (std::getline(in, line)) {
        std::string cleaned = clean_text(line.substr(0, line.find('#')));
        if (!cleaned.empty()) cues.push_back(cleaned);
    }
    return cues;
}

std::string filter_relevant_sentences(const std::string& description) {
    return filter_relevant_sentences(description, default_section_cues());
}

std::string filter_relevant_sentences(const std::string& description,
                                      const std::vector<std::string>& cues) {
    std::string out;
    for (const std::string& sentence : split_sentences(description)) {
        bool boilerplate = std::any_of(cues.begin(), cues.end(), [&](const std::string& cue) {
            return sentence.find(cue) != std::string::npos;
        });
        if (boilerplate) continue;
        if (!out.empty()) out.push_back(' ');
        out += sentence;
    }
    return out;
}

namespace {

// Word tokens for gazetteer matching: whitespace-delimited, with enclosing
// punctuation stripped so "sql," matches the entry "sql".
std::string strip_token(const std::string& token) {
    static const std::string junk = ".,;:!?\"'()[]{}";
    std::size_t begin = 0;
    std::size_t end = token.size();
    while (begin < end && junk.find(token[begin]) != std::string::npos) ++begin;
    while (end > begin && junk.find(token[end - 1]) != std::string::npos) --end;
    return token.substr(begin, end - begin);
}

std::vector<std::string> word_tokens(const std::string& text) {
    std::vector<std::string> words;
    std::istringstream in(text);
    std::string token;
    while (in >> token) {
        std::string word = strip_token(token);
        if (!word.empty()) words.push_back(word);
    }
    return words;
}

} // namespace

std::vector<std::string> extract_skills(const std::string& description,
                                        const std::vector<std::string>& gazetteer) {
    if (gazetteer.empty()) raise(ErrorCode::invalid_argument, "empty gazetteer");

    struct Entry {
        std::vector<std::string> words;
        const std::string* surface;
    };
    std::unordered_map<std::string, std::vector<Entry>> by_first_word;
    std::size_t longest = 1;
    for (const std::string& skill : gazetteer) {
        Entry entry{word_tokens(skill), &skill};
        if (entry.words.empty()) continue;
        longest = std::max(longest, entry.words.size());
        by_first_word[entry.words.front()].push_back(std::move(entry));
    }
    for (auto& [word, entries] : by_first_word) {
        std::sort(entries.begin(), entries.end(),
                  [](const Entry& a, const Entry& b) { return a.words.size() > b.words.size(); });
    }

    const std::vector<std::string> words = word_tokens(description);
    std::vector<std::string> found;
    std::unordered_set<std::string> seen;
    std::size_t i = 0;
    while (i < words.size()) {
        const auto it = by_first_word.find(words[i]);
        std::size_t advance = 1;
        if (it != by_first_word.end()) {
            for (const Entry& entry : it->second) { // longest first
                if (i + entry.words.size() > words.size()) continue;
                if (std::equal(entry.words.begin(), entry.words.end(), words.begin() + i)) {
                    if (seen.insert(*entry.surface).second) found.push_back(*entry.surface);
                    advance = entry.words.size();
                    break;
                }
            }
        }
        i += advance;
    }
    return found;
}

std::vector<std::string> load_gazetteer(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(ErrorCode::io_failure, "cannot open gazetteer: " + path);
    std::vector<std::string> entries;
    std::unordered_set<std::string> seen;
    std::string line;
    while (std::getline(in, line)) {
        std::string cleaned = clean_text(line.substr(0, line.find('#')));
        if (!cleaned.empty() && seen.insert(cleaned).second) entries.push_back(cleaned);
    }
    return entries;
}

namespace {

// Fixed 50-word stopword list for the language gate.
const std::unordered_set<std::string>& english_stopwords() {
    static const std::unordered_set<std::string> words = {
        "the", "a", "an", "and", "or", "of", "to", "in", "on", "for",
        "with", "at", "by", "from", "as", "is", "are", "was", "were", "be",
        "been", "this", "that", "these", "those", "it", "its", "we", "you", "they",
        "he", "she", "our", "your", "their", "will", "would", "can", "could", "should",
        "have", "has", "had", "do", "does", "not", "but", "if", "then", "there",
    };
    return words;
}

} // namespace

bool is_target_language(const std::string& text) {
    // Count letters by codepoint: ASCII a-z/A-Z are basic Latin, anything
    // outside ASCII is treated as a non-Latin letter. Coarse but adequate
    // for an English gate.
    std::uint64_t latin = 0;
    std::uint64_t other = 0;
    for (std::size_t i = 0; i < text.size();) {
        unsigned char c = static_cast<unsigned char>(text[i]);
        if (c < 0x80) {
            if (std::isalpha(c)) ++latin;
            ++i;
        } else {
            ++other;
            std::size_t len = (c >= 0xF0) ? 4 : (c >= 0xE0) ? 3 : 2;
            i += len;
        }
    }
    const std::uint64_t letters = latin + other;
    if (letters == 0) return false;
    if (static_cast<double>(latin) / static_cast<double>(letters) < 0.9) return false;

    std::uint64_t stopword_hits = 0;
    std::string word;
    auto flush = [&] {
        if (!word.empty() && english_stopwords().count(word)) ++stopword_hits;
        word.clear();
    };
    for (char c : text) {
        if (std::isalpha(static_cast<unsigned char>(c))) {
            word.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else {
            flush();
        }
    }
    flush();
    return stopword_hits >= 3;
}

namespace {

bool parse_record(const json& object, JobRecord& record) {
    if (!object.is_object()) return false;
    if (!object.contains("title") || !object["title"].is_string()) return false;
    record.title = object["title"].get<std::string>();

    record.description.clear();
    if (object.contains("description")) {
        if (!object["description"].is_string()) return false;
        record.description = object["description"].get<std::string>();
    }

    record.skills.clear();
    if (object.contains("skills")) {
        if (!object["skills"].is_array()) return false;
        for (const auto& item : object["skills"]) {
            if (!item.is_string()) return false;
            record.skills.push_back(item.get<std::string>());
        }
    }

    record.normalized_title.reset();
    if (object.contains("normalized_title") && !object["normalized_title"].is_null()) {
        if (!object["normalized_title"].is_string()) return false;
        record.normalized_title = object["normalized_title"].get<std::string>();
    }

    record.esco_code.reset();
    if (object.contains("esco_code") && !object["esco_code"].is_null()) {
        if (!object["esco_code"].is_string()) return false;
        record.esco_code = object["esco_code"].get<std::string>();
    }

    record.source = Source::vacancy;
    if (object.contains("source")) {
        if (!object["source"].is_string()) return false;
        try {
            record.source = source_from_name(object["source"].get<std::string>());
        } catch (const Error&) {
            return false;
        }
    }
    return true;
}

// Enforces the JobRecord invariants. Skill lists are normalized in place
// (empties dropped, first occurrence kept); structural violations reject
// the record.
bool validate_record(JobRecord& record) {
    if (clean_text(record.title).empty()) return false;
    if (record.esco_code && !record.normalized_title) return false;

    std::vector<std::string> skills;
    std::unordered_set<std::string> seen;
    for (std::string& skill : record.skills) {
        if (skill.empty()) continue;
        if (seen.insert(skill).second) skills.push_back(std::move(skill));
    }
    record.skills = std::move(skills);
    return true;
}

} // namespace

std::vector<JobRecord> load_jsonl(const std::string& path, LoadReport* report) {
    std::ifstream in(path);
    if (!in) raise(ErrorCode::io_failure, "cannot open corpus file: " + path);

    LoadReport local;
    std::vector<JobRecord> records;
    std::string line;
    std::uint64_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        ++local.lines_read;

        JobRecord record;
        json object = json::parse(line, nullptr, false);
        if (object.is_discarded() || !parse_record(object, record)) {
            ++local.malformed;
            continue;
        }
        if (!validate_record(record)) {
            ++local.skipped_invariant;
            continue;
        }
        records.push_back(std::move(record));
    }

    if (local.lines_read > 0 && local.malformed * 2 > local.lines_read) {
        raise(ErrorCode::parse_failure,
              "more than half of " + path + " is malformed (" +
                  std::to_string(local.malformed) + "/" + std::to_string(local.lines_read) + " lines)");
    }
    if (report) *report = local;
    return records;
}

void write_jsonl(const std::vector<JobRecord>& records, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) raise(ErrorCode::io_failure, "cannot open for writing: " + path);
    for (const JobRecord& record : records) {
        json object;
        object["title"] = record.title;
        object["description"] = record.description;
        object["skills"] = record.skills;
        object["normalized_title"] =
            record.normalized_title ? json(*record.normalized_title) : json(nullptr);
        object["esco_code"] = record.esco_code ? json(*record.esco_code) : json(nullptr);
        object["source"] = source_name(record.source);
        out << object.dump() << '\n';
    }
    if (!out) raise(ErrorCode::io_failure, "write failed: " + path);
}

std::vector<JobRecord> load_benchmark(const std::string& path, LoadReport* report) {
    LoadReport local;
    std::vector<JobRecord> records = load_jsonl(path, &local);
    std::vector<JobRecord> with_gold;
    with_gold.reserve(records.size());
    for (JobRecord& record : records) {
        if (record.normalized_title) {
            with_gold.push_back(std::move(record));
        } else {
            ++local.missing_normalized;
        }
    }
    if (report) *report = local;
    return with_gold;
}

CorpusStats compute_stats(const std::vector<JobRecord>& records) {
    CorpusStats stats;
    std::unordered_set<std::string> titles;
    for (const JobRecord& record : records) {
        ++stats.total_records;
        const std::size_t n = record.skills.size();
        if (n < 10) {
            ++stats.skills_lt_10;
        } else if (n <= 100) {
            ++stats.skills_10_to_100;
        } else {
            ++stats.skills_gt_100;
        }
        if (record.esco_code && !record.esco_code->empty() &&
            std::isdigit(static_cast<unsigned char>(record.esco_code->front()))) {
            ++stats.records_per_esco_family[record.esco_code->front()];
        }
        titles.insert(clean_text(record.title));
    }
    stats.unique_titles = titles.size();
    return stats;
}

std::string stats_to_json(const CorpusStats& stats) {
    json families = json::object();
    for (const auto& [digit, count] : stats.records_per_esco_family) {
        families[std::string(1, digit)] = count;
    }
    json object = {
        {"total_records", stats.total_records},
        {"records_per_esco_family", families},
        {"skill_count_buckets",
         {{"lt10", stats.skills_lt_10}, {"10to100", stats.skills_10_to_100}, {"gt100", stats.skills_gt_100}}},
        {"unique_titles", stats.unique_titles},
    };
    return object.dump(2);
}

std::vector<JobRecord> preprocess(const std::vector<JobRecord>& raw,
                                  const std::vector<std::string>& gazetteer,
                                  const std::vector<std::string>& cues,
                                  PreprocessCounts* counts) {
    PreprocessCounts local;
    std::vector<JobRecord> kept;
    std::set<std::pair<std::string, std::vector<std::string>>> dedup_keys;

    for (const JobRecord& record : raw) {
        ++local.read;
        const std::string title = clean_text(record.title);
        if (title.empty()) {
            ++local.dropped_empty;
            continue;
        }
        const std::string description = clean_text(record.description);
        if (!is_target_language(title + " " + description)) {
            ++local.dropped_language;
            continue;
        }
        const std::string relevant = filter_relevant_sentences(description, cues);
        std::vector<std::string> skills = extract_skills(relevant, gazetteer);

        std::vector<std::string> sorted_skills = skills;
        std::sort(sorted_skills.begin(), sorted_skills.end());
        if (!dedup_keys.emplace(title, std::move(sorted_skills)).second) {
            ++local.dropped_duplicate;
            continue;
        }

        JobRecord cleaned;
        cleaned.title = title;
        cleaned.description = relevant;
        cleaned.skills = std::move(skills);
        if (record.normalized_title) cleaned.normalized_title = clean_text(*record.normalized_title);
        cleaned.esco_code = record.esco_code;
        cleaned.source = record.source;
        kept.push_back(std::move(cleaned));
        ++local.kept;
    }
    if (counts) *counts = local;
    return kept;
}

} // namespace titlenorm::corpus
