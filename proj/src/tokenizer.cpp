#include "titlenorm/tokenizer.hpp"
#include "titlenorm/error.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

namespace titlenorm::tok {

namespace {

const std::vector<std::string>& special_literals() {
    static const std::vector<std::string> literals = {"[PAD]", "[UNK]", "[CLS]", "[SEP]", "[SKILL]"};
    return literals;
}

std::vector<std::string> whitespace_split(const std::string& text) {
    std::vector<std::string> words;
    std::istringstream in(text);
    std::string word;
    while (in >> word) words.push_back(word);
    return words;
}

} // namespace

void Vocabulary::add(const std::string& token) {
    const TokenId id = static_cast<TokenId>(id_to_token_.size());
    token_to_id_.emplace(token, id);
    id_to_token_.push_back(token);
}

Vocabulary Vocabulary::build(const std::vector<std::string>& corpus, int min_frequency) {
    if (corpus.empty()) raise(ErrorCode::invalid_argument, "vocabulary: empty corpus");
    if (min_frequency < 1) raise(ErrorCode::invalid_argument, "vocabulary: min_frequency must be >= 1");

    std::map<std::string, std::uint64_t> freq;
    for (const std::string& text : corpus) {
        for (const std::string& word : whitespace_split(text)) ++freq[word];
    }

    std::vector<std::pair<std::string, std::uint64_t>> entries(freq.begin(), freq.end());
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    Vocabulary vocab;
    vocab.min_frequency_ = min_frequency;
    for (const std::string& literal : special_literals()) vocab.add(literal);
    for (const auto& [word, count] : entries) {
        if (count < static_cast<std::uint64_t>(min_frequency)) continue;
        if (vocab.token_to_id_.count(word)) continue; // someone typed a special literal
        vocab.add(word);
    }
    return vocab;
}

Vocabulary Vocabulary::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(ErrorCode::io_failure, "cannot open vocabulary: " + path);

    Vocabulary vocab;
    std::string line;
    std::size_t index = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (index < kNumSpecials && line != special_literals()[index]) {
            raise(ErrorCode::parse_failure,
                  "vocabulary " + path + ": line " + std::to_string(index + 1) +
                      " must be " + special_literals()[index]);
        }
        if (line.find_first_of(" \t") != std::string::npos) {
            raise(ErrorCode::parse_failure,
                  "vocabulary " + path + ": token contains whitespace at line " + std::to_string(index + 1));
        }
        if (vocab.token_to_id_.count(line)) {
            raise(ErrorCode::parse_failure, "vocabulary " + path + ": duplicate token " + line);
        }
        vocab.add(line);
        ++index;
    }
    if (vocab.size() < kNumSpecials) {
        raise(ErrorCode::parse_failure, "vocabulary " + path + ": missing special tokens");
    }
    return vocab;
}

void Vocabulary::save(const std::string& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) raise(ErrorCode::io_failure, "cannot open for writing: " + path);
    for (const std::string& token : id_to_token_) out << token << '\n';
    if (!out) raise(ErrorCode::io_failure, "write failed: " + path);
}

TokenId Vocabulary::id_of(const std::string& token) const {
    const auto it = token_to_id_.find(token);
    return it == token_to_id_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token_of(TokenId id) const {
    if (id >= id_to_token_.size()) {
        raise(ErrorCode::invalid_argument, "token id out of range: " + std::to_string(id));
    }
    return id_to_token_[id];
}

bool Vocabulary::contains(const std::string& token) const {
    return token_to_id_.count(token) > 0;
}

std::size_t EncodedInput::real_length() const {
    std::size_t n = 0;
    while (n < mask.size() && mask[n]) ++n;
    return n;
}

EncodedInput encode_title(const std::string& title, const Vocabulary& vocab) {
    EncodedInput input;
    input.mode = Mode::title;
    input.ids.push_back(kCls);
    for (const std::string& word : whitespace_split(title)) {
        if (input.ids.size() >= kTitleMaxLen - 1) break;
        input.ids.push_back(vocab.id_of(word));
    }
    input.ids.push_back(kSep);
    input.mask.assign(input.ids.size(), 1);
    return input;
}

EncodedInput encode_skills(const std::vector<std::string>& skills, const Vocabulary& vocab) {
    if (skills.empty()) raise(ErrorCode::invalid_argument, "encode_skills: empty skill list");

    EncodedInput input;
    input.mode = Mode::skills;
    input.ids.push_back(kCls);
    bool any = false;
    for (const std::string& skill : skills) {
        const std::vector<std::string> words = whitespace_split(skill);
        // marker + words, leaving room for the trailing [SEP]
        if (input.ids.size() + 1 + words.size() > kSkillsMaxLen - 1) {
            if (!any) {
                raise(ErrorCode::invalid_argument,
                      "encode_skills: first skill does not fit in " + std::to_string(kSkillsMaxLen) + " tokens");
            }
            continue;
        }
        input.skill_positions.push_back(input.ids.size());
        input.ids.push_back(kSkill);
        for (const std::string& word : words) input.ids.push_back(vocab.id_of(word));
        any = true;
    }
    input.ids.push_back(kSep);
    input.mask.assign(input.ids.size(), 1);
    return input;
}

void pad_to(EncodedInput& input, std::size_t target_len) {
    while (input.ids.size() < target_len) {
        input.ids.push_back(kPad);
        input.mask.push_back(0);
    }
}

std::string decode(const std::vector<TokenId>& ids, const Vocabulary& vocab) {
    std::string out;
    for (TokenId id : ids) {
        const std::string& token = vocab.token_of(id); // validates range
        if (id == kPad || id == kCls || id == kSep || id == kSkill) continue;
        if (!out.empty()) out.push_back(' ');
        out += token;
    }
    return out;
}

} // namespace titlenorm::tok
