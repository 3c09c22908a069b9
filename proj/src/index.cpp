#include "titlenorm/index.hpp"
#include "titlenorm/checkpoint.hpp"
#include "titlenorm/corpus.hpp"
#include "titlenorm/error.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <unordered_map>

namespace titlenorm::index {

TitleIndex::TitleIndex(std::vector<std::string> labels, Eigen::MatrixXf vectors,
                       digest::Sha256 fingerprint)
    : labels_(std::move(labels)), vectors_(std::move(vectors)), fingerprint_(fingerprint) {
    if (labels_.empty()) raise(ErrorCode::invalid_argument, "index: empty label set");
    if (static_cast<std::size_t>(vectors_.rows()) != labels_.size())
        raise(ErrorCode::invalid_argument, "index: label/vector count mismatch");
    for (Eigen::Index i = 0; i < vectors_.rows(); ++i) {
        if (std::abs(vectors_.row(i).norm() - 1.0f) > 1e-4f)
            raise(ErrorCode::numeric_failure, "index: non-unit vector for label " + labels_[static_cast<std::size_t>(i)]);
    }
}

const std::string& TitleIndex::label(std::uint32_t id) const {
    if (id >= labels_.size()) raise(ErrorCode::invalid_argument, "index: label id out of range");
    return labels_[id];
}

std::optional<std::uint32_t> TitleIndex::id_of(const std::string& label) const {
    const auto it = std::find(labels_.begin(), labels_.end(), label);
    if (it == labels_.end()) return std::nullopt;
    return static_cast<std::uint32_t>(it - labels_.begin());
}

TitleIndex build_index_with(const std::vector<std::string>& labels, const TitleEmbedder& embed,
                            const digest::Sha256& fingerprint) {
    if (labels.empty()) raise(ErrorCode::invalid_argument, "build_index: empty label set");

    std::vector<std::string> cleaned;
    std::unordered_map<std::string, std::size_t> seen;
    cleaned.reserve(labels.size());
    for (const std::string& label : labels) {
        std::string c = corpus::clean_text(label);
        if (c.empty()) raise(ErrorCode::invalid_argument, "build_index: label cleans to empty: " + label);
        if (!seen.emplace(c, cleaned.size()).second)
            raise(ErrorCode::invalid_argument, "build_index: duplicate label after cleaning: " + c);
        cleaned.push_back(std::move(c));
    }

    Eigen::MatrixXf vectors;
    for (std::size_t i = 0; i < cleaned.size(); ++i) {
        const enc::Embedding e = embed(cleaned[i]);
        if (i == 0) vectors.resize(static_cast<Eigen::Index>(cleaned.size()), static_cast<Eigen::Index>(e.values.size()));
        if (static_cast<Eigen::Index>(e.values.size()) != vectors.cols())
            raise(ErrorCode::invalid_argument, "build_index: inconsistent embedding dimension");
        vectors.row(static_cast<Eigen::Index>(i)) =
            Eigen::Map<const Eigen::VectorXf>(e.values.data(), static_cast<Eigen::Index>(e.values.size())).transpose();
    }
    return TitleIndex(std::move(cleaned), std::move(vectors), fingerprint);
}

TitleIndex build_index(const std::vector<std::string>& labels, const enc::Model& model,
                       const tok::Vocabulary& vocab) {
    return build_index_with(
        labels, [&](const std::string& label) { return enc::embed_title(model, vocab, label); },
        ckpt::model_fingerprint(model));
}

SearchResult query(const TitleIndex& index, const std::vector<float>& q, std::size_t k) {
    if (k == 0) raise(ErrorCode::invalid_argument, "query: K must be >= 1");
    if (q.size() != index.dimension()) raise(ErrorCode::invalid_argument, "query: dimension mismatch");
    Eigen::Map<const Eigen::VectorXf> qv(q.data(), static_cast<Eigen::Index>(q.size()));
    if (std::abs(qv.norm() - 1.0f) > 1e-4f)
        raise(ErrorCode::numeric_failure, "query: vector not unit-norm");

    const Eigen::VectorXf scores = index.vectors() * qv;
    std::vector<std::uint32_t> ids(index.size());
    std::iota(ids.begin(), ids.end(), 0u);
    const std::size_t take = std::min(k, ids.size());
    const auto better = [&](std::uint32_t a, std::uint32_t b) {
        const float sa = scores(static_cast<Eigen::Index>(a));
        const float sb = scores(static_cast<Eigen::Index>(b));
        if (sa != sb) return sa > sb;
        return a < b;
    };
    std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(take), ids.end(), better);

    SearchResult result;
    result.ranked.reserve(take);
    for (std::size_t i = 0; i < take; ++i) {
        const std::uint32_t id = ids[i];
        result.ranked.push_back({id, index.label(id), scores(static_cast<Eigen::Index>(id))});
    }
    return result;
}

SearchResult query(const TitleIndex& index, const enc::Embedding& q, std::size_t k) {
    return query(index, q.values, k);
}

namespace {

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(const std::string& bytes, std::size_t& pos) {
    if (pos + 4 > bytes.size()) raise(ErrorCode::parse_failure, "index file truncated");
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<std::uint8_t>(bytes[pos + static_cast<std::size_t>(i)]);
    pos += 4;
    return v;
}

} // namespace

void save_index(const TitleIndex& index, const std::string& path) {
    std::string out;
    out.append(kIndexMagic, sizeof(kIndexMagic));
    put_u32(out, kIndexVersion);
    put_u32(out, index.dimension());
    put_u32(out, static_cast<std::uint32_t>(index.size()));
    out.append(reinterpret_cast<const char*>(index.fingerprint().data()), index.fingerprint().size());

    for (std::uint32_t id = 0; id < index.size(); ++id) {
        put_u32(out, id);
        const std::string& label = index.label(id);
        put_u32(out, static_cast<std::uint32_t>(label.size()));
        out += label;
        for (Eigen::Index c = 0; c < index.vectors().cols(); ++c) {
            std::uint32_t bits;
            const float v = index.vectors()(static_cast<Eigen::Index>(id), c);
            std::memcpy(&bits, &v, sizeof(bits));
            put_u32(out, bits);
        }
    }

    const std::string tmp = path + ".tmp";
    {
        std::ofstream file(tmp, std::ios::binary | std::ios::trunc);
        if (!file) raise(ErrorCode::io_failure, "cannot open for writing: " + tmp);
        file.write(out.data(), static_cast<std::streamsize>(out.size()));
        if (!file) raise(ErrorCode::io_failure, "write failed: " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        raise(ErrorCode::io_failure, "rename failed: " + path);
    }
}

TitleIndex load_index(const std::string& path, const std::optional<digest::Sha256>& expected_fingerprint,
                      std::optional<std::uint32_t> expected_dimension, bool force) {
    std::ifstream file(path, std::ios::binary);
    if (!file) raise(ErrorCode::io_failure, "cannot open index: " + path);
    std::string bytes((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());

    std::size_t pos = 0;
    if (bytes.size() < sizeof(kIndexMagic) || std::memcmp(bytes.data(), kIndexMagic, sizeof(kIndexMagic)) != 0)
        raise(ErrorCode::parse_failure, "not an index file (bad magic): " + path);
    pos += sizeof(kIndexMagic);
    const std::uint32_t version = get_u32(bytes, pos);
    if (version != kIndexVersion)
        raise(ErrorCode::parse_failure, "unsupported index version " + std::to_string(version));
    const std::uint32_t dim = get_u32(bytes, pos);
    const std::uint32_t count = get_u32(bytes, pos);

    digest::Sha256 fingerprint{};
    if (pos + fingerprint.size() > bytes.size()) raise(ErrorCode::parse_failure, "index file truncated");
    std::memcpy(fingerprint.data(), bytes.data() + pos, fingerprint.size());
    pos += fingerprint.size();

    if (!force) {
        if (expected_dimension && *expected_dimension != dim)
            raise(ErrorCode::mismatch, "index dimension " + std::to_string(dim) + " does not match expected " +
                                           std::to_string(*expected_dimension));
        if (expected_fingerprint && *expected_fingerprint != fingerprint)
            raise(ErrorCode::mismatch, "index was built by a different encoder checkpoint");
    }

    std::vector<std::string> labels(count);
    Eigen::MatrixXf vectors(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(dim));
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t id = get_u32(bytes, pos);
        if (id != i) raise(ErrorCode::parse_failure, "index ids are not dense");
        const std::uint32_t label_len = get_u32(bytes, pos);
        if (pos + label_len > bytes.size()) raise(ErrorCode::parse_failure, "index file truncated");
        labels[i].assign(bytes, pos, label_len);
        pos += label_len;
        for (std::uint32_t c = 0; c < dim; ++c) {
            const std::uint32_t bits = get_u32(bytes, pos);
            float v;
            std::memcpy(&v, &bits, sizeof(v));
            vectors(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = v;
        }
    }
    if (pos != bytes.size()) raise(ErrorCode::parse_failure, "index has trailing bytes");
    return TitleIndex(std::move(labels), std::move(vectors), fingerprint);
}

} // namespace titlenorm::index
