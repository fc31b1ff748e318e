#pragma once

#include <string>
#include <string_view>

#include "evit/vit.hpp"

namespace evit {

// VITC layout: "VITC", u32 header length, UTF-8 JSON header holding the
// config and a manifest of (name, shape, byte offset) in canonical tensor
// order, then every tensor as little-endian f64, row-major, back to back.
std::string save_checkpoint(const ViTParams& params, const ViTConfig& cfg);

struct Checkpoint {
  ViTConfig config;
  ViTParams params;
};

// BadMagic, ManifestMismatch (header or payload disagree with the config),
// ShapeMismatch (names the offending tensor).
Checkpoint load_checkpoint(std::string_view bytes);

void save_checkpoint_file(const ViTParams& params, const ViTConfig& cfg, const std::string& path);
Checkpoint load_checkpoint_file(const std::string& path);

}  // namespace evit
