#include "titlenorm/checkpoint.hpp"
#include "titlenorm/error.hpp"

#include <nlohmann/json.hpp>

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>

using nlohmann::json;

namespace titlenorm::ckpt {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
    out.push_back(static_cast<char>((v >> 16) & 0xFF));
    out.push_back(static_cast<char>((v >> 24) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
    put_u32(out, static_cast<std::uint32_t>(v & 0xFFFFFFFFULL));
    put_u32(out, static_cast<std::uint32_t>(v >> 32));
}

void put_f32(std::string& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    put_u32(out, bits);
}

class Reader {
public:
    explicit Reader(const std::string& bytes) : bytes_(bytes) {}

    std::uint32_t u32() {
        require(4);
        std::uint32_t v = 0;
        for (int i = 3; i >= 0; --i) {
            v = (v << 8) | static_cast<std::uint8_t>(bytes_[pos_ + static_cast<std::size_t>(i)]);
        }
        pos_ += 4;
        return v;
    }

    std::uint64_t u64() {
        const std::uint64_t lo = u32();
        const std::uint64_t hi = u32();
        return lo | (hi << 32);
    }

    float f32() {
        const std::uint32_t bits = u32();
        float v;
        std::memcpy(&v, &bits, sizeof(v));
        return v;
    }

    void raw(char* dest, std::size_t len) {
        require(len);
        std::memcpy(dest, bytes_.data() + pos_, len);
        pos_ += len;
    }

    bool exhausted() const { return pos_ == bytes_.size(); }

private:
    void require(std::size_t len) {
        if (pos_ + len > bytes_.size()) {
            raise(ErrorCode::parse_failure, "checkpoint truncated");
        }
    }

    const std::string& bytes_;
    std::size_t pos_ = 0;
};

} // namespace

std::string serialize_model(const enc::Model& model) {
    std::string out;
    out.append(kMagic, sizeof(kMagic));
    put_u32(out, kFormatVersion);
    const enc::EncoderConfig& c = model.config;
    put_u32(out, c.vocab_size);
    put_u32(out, c.hidden_dim);
    put_u32(out, c.num_layers);
    put_u32(out, c.num_heads);
    put_u32(out, c.ffn_dim);
    put_u32(out, c.max_positions);
    put_u32(out, c.pooled_dim);
    put_f32(out, c.dropout_rate);
    put_u64(out, c.init_seed);

    enc::visit_params(model.params, [&](const std::string&, enc::TensorKind, const auto& tensor) {
        for (Eigen::Index col = 0; col < tensor.cols(); ++col)
            for (Eigen::Index row = 0; row < tensor.rows(); ++row)
                put_f32(out, static_cast<float>(tensor(row, col)));
    });
    return out;
}

enc::Model deserialize_model(const std::string& bytes) {
    Reader reader(bytes);
    char magic[4];
    reader.raw(magic, sizeof(magic));
    if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        raise(ErrorCode::parse_failure, "not a checkpoint file (bad magic)");
    }
    const std::uint32_t version = reader.u32();
    if (version != kFormatVersion) {
        raise(ErrorCode::parse_failure, "unsupported checkpoint version " + std::to_string(version));
    }

    enc::EncoderConfig config;
    config.vocab_size = reader.u32();
    config.hidden_dim = reader.u32();
    config.num_layers = reader.u32();
    config.num_heads = reader.u32();
    config.ffn_dim = reader.u32();
    config.max_positions = reader.u32();
    config.pooled_dim = reader.u32();
    config.dropout_rate = reader.f32();
    config.init_seed = reader.u64();
    config.validate();

    enc::Model model{config, enc::allocate_params<float>(config)};
    enc::visit_params(model.params, [&](const std::string&, enc::TensorKind, auto& tensor) {
        for (Eigen::Index col = 0; col < tensor.cols(); ++col)
            for (Eigen::Index row = 0; row < tensor.rows(); ++row)
                tensor(row, col) = reader.f32();
    });
    if (!reader.exhausted()) {
        raise(ErrorCode::parse_failure, "checkpoint has trailing bytes");
    }
    if (!enc::all_finite(model.params)) {
        raise(ErrorCode::numeric_failure, "checkpoint contains non-finite values");
    }
    return model;
}

void save_checkpoint(const enc::Model& model, const std::string& path,
                     const std::string& vocab_sha256_hex) {
    const std::string payload = serialize_model(model);

    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) raise(ErrorCode::io_failure, "cannot open for writing: " + tmp);
        out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
        if (!out) raise(ErrorCode::io_failure, "write failed: " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        raise(ErrorCode::io_failure, "rename failed: " + path);
    }

    json tensors = json::array();
    enc::visit_params(model.params, [&](const std::string& name, enc::TensorKind, const auto& tensor) {
        tensors.push_back({{"name", name}, {"rows", tensor.rows()}, {"cols", tensor.cols()}});
    });
    const enc::EncoderConfig& c = model.config;
    json manifest = {
        {"format", "SKSM"},
        {"version", kFormatVersion},
        {"config",
         {{"vocab_size", c.vocab_size},
          {"hidden_dim", c.hidden_dim},
          {"num_layers", c.num_layers},
          {"num_heads", c.num_heads},
          {"ffn_dim", c.ffn_dim},
          {"max_positions", c.max_positions},
          {"pooled_dim", c.pooled_dim},
          {"dropout_rate", c.dropout_rate},
          {"init_seed", c.init_seed}}},
        {"tensor_dtype", "f32-le"},
        {"tensors", tensors},
        {"vocab_sha256", vocab_sha256_hex},
        {"fingerprint", digest::to_hex(digest::sha256(payload))},
    };
    std::ofstream manifest_out(path + ".json", std::ios::trunc);
    if (!manifest_out) raise(ErrorCode::io_failure, "cannot open for writing: " + path + ".json");
    manifest_out << manifest.dump(2) << '\n';
}

enc::Model load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorCode::io_failure, "cannot open checkpoint: " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_model(bytes);
}

digest::Sha256 model_fingerprint(const enc::Model& model) {
    return digest::sha256(serialize_model(model));
}

} // namespace titlenorm::ckpt
