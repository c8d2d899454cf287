#include "chemdist/config_io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <json.hpp>

namespace chemdist {
namespace {

template <class T>
void put_le(std::vector<unsigned char>& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char raw[sizeof(T)];
  std::memcpy(raw, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(std::begin(raw), std::end(raw));
  out.insert(out.end(), std::begin(raw), std::end(raw));
}

template <class T>
T get_le(const std::vector<unsigned char>& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw InvalidArgument("configuration dump truncated in header");
  unsigned char raw[sizeof(T)];
  std::memcpy(raw, in.data() + pos, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(std::begin(raw), std::end(raw));
  pos += sizeof(T);
  T value;
  std::memcpy(&value, raw, sizeof(T));
  return value;
}

}  // namespace

void write_configuration(const EdgeConfiguration& cfg, const std::filesystem::path& binary_path,
                         const std::filesystem::path& sidecar_path) {
  const auto& spec = cfg.spec();
  std::vector<unsigned char> bytes;
  put_le<std::uint32_t>(bytes, static_cast<std::uint32_t>(spec.dim()));
  put_le<std::uint32_t>(bytes, static_cast<std::uint32_t>(spec.half_side()));
  put_le<double>(bytes, cfg.p());
  put_le<std::uint64_t>(bytes, cfg.seed());
  const std::size_t edges = spec.edge_count();
  std::vector<unsigned char> payload((edges + 7) / 8, 0);
  for (std::size_t e = 0; e < edges; ++e)
    if (cfg.is_open_edge(e)) payload[e / 8] |= static_cast<unsigned char>(1u << (e % 8));
  bytes.insert(bytes.end(), payload.begin(), payload.end());

  std::ofstream bin(binary_path, std::ios::binary | std::ios::trunc);
  if (!bin) throw std::runtime_error("cannot write " + binary_path.string());
  bin.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));

  nlohmann::ordered_json side;
  side["format"] = "chemdist-edge-dump";
  side["d"] = spec.dim();
  side["L"] = spec.half_side();
  side["p"] = cfg.p();
  side["seed"] = cfg.seed();
  side["margin"] = spec.margin();
  side["edge_count"] = edges;
  side["open_count"] = cfg.open_count();
  side["payload_bytes"] = payload.size();
  std::ofstream js(sidecar_path, std::ios::trunc);
  if (!js) throw std::runtime_error("cannot write " + sidecar_path.string());
  js << side.dump(2) << '\n';
}

EdgeConfiguration read_configuration(const std::filesystem::path& binary_path, int margin) {
  std::ifstream bin(binary_path, std::ios::binary);
  if (!bin) throw InvalidArgument("cannot open " + binary_path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(bin)), std::istreambuf_iterator<char>());
  std::size_t pos = 0;
  const auto d = get_le<std::uint32_t>(bytes, pos);
  const auto half = get_le<std::uint32_t>(bytes, pos);
  const auto p = get_le<double>(bytes, pos);
  const auto seed = get_le<std::uint64_t>(bytes, pos);
  BoxSpec spec(static_cast<int>(d), static_cast<int>(half), margin);
  const std::size_t edges = spec.edge_count();
  if (bytes.size() - pos != (edges + 7) / 8)
    throw InvalidArgument("configuration dump payload has wrong length");
  std::vector<bool> bits(edges);
  for (std::size_t e = 0; e < edges; ++e) bits[e] = (bytes[pos + e / 8] >> (e % 8)) & 1u;
  return EdgeConfiguration(std::move(spec), p, seed, bits);
}

}  // namespace chemdist
