#pragma once

#include <filesystem>

#include "chemdist/lattice.hpp"

namespace chemdist {

// Binary layout (all little-endian):
//   u32 d | u32 L | f64 p (IEEE-754) | u64 seed | ceil(E/8) payload bytes
// Payload bit e (byte e/8, bit e%8, LSB first) is the state of canonical edge e.

/// Writes the binary dump and its JSON sidecar (same header, human-readable).
void write_configuration(const EdgeConfiguration& cfg, const std::filesystem::path& binary_path,
                         const std::filesystem::path& sidecar_path);

/// Reads a binary dump written by write_configuration. `margin` is not stored in the dump.
EdgeConfiguration read_configuration(const std::filesystem::path& binary_path, int margin = 0);

}  // namespace chemdist
