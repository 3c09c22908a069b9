#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace titlenorm::tok {

using TokenId = std::uint32_t;

// Reserved ids; the literals occupy the first five lines of a vocab file.
inline constexpr TokenId kPad = 0;
inline constexpr TokenId kUnk = 1;
inline constexpr TokenId kCls = 2;
inline constexpr TokenId kSep = 3;
inline constexpr TokenId kSkill = 4;
inline constexpr std::size_t kNumSpecials = 5;

inline constexpr std::size_t kTitleMaxLen = 32;
inline constexpr std::size_t kSkillsMaxLen = 128;

class Vocabulary {
public:
    // Whitespace tokens with frequency >= min_frequency, ordered by
    // descending frequency then lexicographically. Throws on empty corpus.
    static Vocabulary build(const std::vector<std::string>& corpus, int min_frequency);

    static Vocabulary load(const std::string& path);
    void save(const std::string& path) const;

    TokenId id_of(const std::string& token) const; // kUnk for OOV
    const std::string& token_of(TokenId id) const; // throws on out-of-range
    bool contains(const std::string& token) const;
    std::size_t size() const { return id_to_token_.size(); }
    int min_frequency() const { return min_frequency_; }

private:
    Vocabulary() = default;
    void add(const std::string& token);

    std::unordered_map<std::string, TokenId> token_to_id_;
    std::vector<std::string> id_to_token_;
    int min_frequency_ = 1;
};

enum class Mode { title, skills };

struct EncodedInput {
    std::vector<TokenId> ids;
    std::vector<std::uint8_t> mask;          // 1 on real tokens, 0 on the padding suffix
    std::vector<std::size_t> skill_positions; // indices of [SKILL] markers
    Mode mode = Mode::title;

    std::size_t real_length() const;
};

// [CLS] words [SEP], truncated to kTitleMaxLen keeping CLS/SEP. No padding.
EncodedInput encode_title(const std::string& title, const Vocabulary& vocab);

// [CLS] ([SKILL] skill-words)* [SEP] under kSkillsMaxLen. A skill is kept
// only if it fits whole; throws if even the first one cannot.
EncodedInput encode_skills(const std::vector<std::string>& skills, const Vocabulary& vocab);

// Extends the padding suffix (mask 0) up to target_len.
void pad_to(EncodedInput& input, std::size_t target_len);

// Specials omitted, tokens joined by single spaces.
std::string decode(const std::vector<TokenId>& ids, const Vocabulary& vocab);

} // namespace titlenorm::tok
