#pragma once

#include "titlenorm/digest.hpp"
#include "titlenorm/encoder.hpp"

#include <string>

namespace titlenorm::ckpt {

inline constexpr char kMagic[4] = {'S', 'K', 'S', 'M'};
inline constexpr std::uint32_t kFormatVersion = 1;

// Checkpoint payload: magic, version, config fields, then every tensor in
// visit_params order as little-endian f32 (column-major element order).
std::string serialize_model(const enc::Model& model);
enc::Model deserialize_model(const std::string& bytes);

// Atomic write (temp file + rename) plus a sibling `<path>.json` manifest
// with tensor shapes and the vocabulary file hash.
void save_checkpoint(const enc::Model& model, const std::string& path,
                     const std::string& vocab_sha256_hex = "");
enc::Model load_checkpoint(const std::string& path);

// SHA-256 of the serialized payload; indexes record it so a query encoder
// can be checked against the encoder that built the index.
digest::Sha256 model_fingerprint(const enc::Model& model);

} // namespace titlenorm::ckpt
