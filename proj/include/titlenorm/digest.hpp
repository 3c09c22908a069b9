#pragma once

#include <array>
#include <cstdint>
#include <string>

namespace titlenorm::digest {

using Sha256 = std::array<std::uint8_t, 32>;

Sha256 sha256(const void* data, std::size_t len);
Sha256 sha256(const std::string& data);
Sha256 sha256_file(const std::string& path);

std::string to_hex(const Sha256& digest);

} // namespace titlenorm::digest
