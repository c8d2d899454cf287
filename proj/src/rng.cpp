#include "chemdist/rng.hpp"

namespace chemdist {

std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t tag_of(std::string_view name) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : name) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> tags) {
  std::uint64_t key = mix64(master ^ 0xD1B54A32D192ED03ULL);
  std::uint64_t position = 0;
  for (std::uint64_t t : tags) {
    key = mix64(key ^ mix64(t + 0x8CB92BA72F3D8DD7ULL * ++position));
  }
  return key;
}

}  // namespace chemdist
