#include "titlenorm/digest.hpp"
#include "titlenorm/error.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <memory>
#include <vector>

namespace titlenorm::digest {

Sha256 sha256(const void* data, std::size_t len) {
    Sha256 out{};
    unsigned int out_len = 0;
    if (EVP_Digest(data, len, out.data(), &out_len, EVP_sha256(), nullptr) != 1 || out_len != out.size()) {
        raise(ErrorCode::numeric_failure, "sha256 digest failed");
    }
    return out;
}

Sha256 sha256(const std::string& data) { return sha256(data.data(), data.size()); }

Sha256 sha256_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorCode::io_failure, "cannot open for hashing: " + path);

    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
        raise(ErrorCode::numeric_failure, "sha256 init failed");
    }
    std::vector<char> buffer(1 << 16);
    while (in) {
        in.read(buffer.data(), static_cast<std::streamsize>(buffer.size()));
        const std::streamsize got = in.gcount();
        if (got > 0 && EVP_DigestUpdate(ctx.get(), buffer.data(), static_cast<std::size_t>(got)) != 1) {
            raise(ErrorCode::numeric_failure, "sha256 update failed");
        }
    }
    Sha256 out{};
    unsigned int out_len = 0;
    if (EVP_DigestFinal_ex(ctx.get(), out.data(), &out_len) != 1 || out_len != out.size()) {
        raise(ErrorCode::numeric_failure, "sha256 final failed");
    }
    return out;
}

std::string to_hex(const Sha256& d) {
    static const char* alphabet = "0123456789abcdef";
    std::string hex;
    hex.reserve(d.size() * 2);
    for (std::uint8_t byte : d) {
        hex.push_back(alphabet[byte >> 4]);
        hex.push_back(alphabet[byte & 0xF]);
    }
    return hex;
}

} // namespace titlenorm::digest
