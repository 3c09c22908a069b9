#pragma once

#include "titlenorm/digest.hpp"
#include "titlenorm/encoder.hpp"
#include "titlenorm/tokenizer.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace titlenorm::index {

inline constexpr char kIndexMagic[4] = {'S', 'K', 'I', 'X'};
inline constexpr std::uint32_t kIndexVersion = 1;

// Immutable embedding index over the normalized-title taxonomy. label_id is
// the dense position (0..n-1) of the label in build order.
class TitleIndex {
public:
    TitleIndex(std::vector<std::string> labels, Eigen::MatrixXf vectors, digest::Sha256 fingerprint);

    std::size_t size() const { return labels_.size(); }
    std::uint32_t dimension() const { return static_cast<std::uint32_t>(vectors_.cols()); }
    const std::string& label(std::uint32_t id) const;
    std::optional<std::uint32_t> id_of(const std::string& label) const;
    const Eigen::MatrixXf& vectors() const { return vectors_; }
    const digest::Sha256& fingerprint() const { return fingerprint_; }

private:
    std::vector<std::string> labels_;
    Eigen::MatrixXf vectors_; // n x p, unit rows
    digest::Sha256 fingerprint_;
};

struct SearchHit {
    std::uint32_t label_id = 0;
    std::string label;
    float score = 0.0f;
};

struct SearchResult {
    std::vector<SearchHit> ranked; // score descending, ties by ascending id
};

using TitleEmbedder = std::function<enc::Embedding(const std::string&)>;

// Embeds every label in title mode with the given encoder. Labels must be
// unique after cleaning.
TitleIndex build_index(const std::vector<std::string>& labels, const enc::Model& model,
                       const tok::Vocabulary& vocab);

// Same contract for arbitrary encoders (the static baseline uses this).
TitleIndex build_index_with(const std::vector<std::string>& labels, const TitleEmbedder& embed,
                            const digest::Sha256& fingerprint);

// Exact top-K scan by cosine. K > n returns all n entries.
SearchResult query(const TitleIndex& index, const std::vector<float>& q, std::size_t k);
SearchResult query(const TitleIndex& index, const enc::Embedding& q, std::size_t k);

void save_index(const TitleIndex& index, const std::string& path);

// Refuses a dimension/fingerprint mismatch against the expectation unless
// force is set.
TitleIndex load_index(const std::string& path,
                      const std::optional<digest::Sha256>& expected_fingerprint = std::nullopt,
                      std::optional<std::uint32_t> expected_dimension = std::nullopt,
                      bool force = false);

} // namespace titlenorm::index
