#include "bokehkit/net/weights_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <vector>

#include "bokehkit/core/error.hpp"

namespace bokehkit {

namespace {

constexpr char kMagic[4] = {'B', 'K', 'W', '1'};
constexpr uint64_t kMaxTensorValues = uint64_t(1) << 28;

void put_u16(std::ostream& out, uint16_t v) {
  const char bytes[2] = {static_cast<char>(v & 0xff), static_cast<char>(v >> 8)};
  out.write(bytes, 2);
}

void put_u32(std::ostream& out, uint32_t v) {
  char bytes[4];
  for (int i = 0; i < 4; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(bytes, 4);
}

bool get_bytes(std::istream& in, char* dst, size_t n) {
  in.read(dst, static_cast<std::streamsize>(n));
  return static_cast<size_t>(in.gcount()) == n;
}

bool get_u16(std::istream& in, uint16_t& v) {
  unsigned char b[2];
  if (!get_bytes(in, reinterpret_cast<char*>(b), 2)) return false;
  v = static_cast<uint16_t>(b[0] | (b[1] << 8));
  return true;
}

bool get_u32(std::istream& in, uint32_t& v) {
  unsigned char b[4];
  if (!get_bytes(in, reinterpret_cast<char*>(b), 4)) return false;
  v = static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
      (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
  return true;
}

}  // namespace

void save_weights(const WeightStore& store, const std::string& path) {
  if (store.size() > std::numeric_limits<uint32_t>::max())
    throw ValueError("save_weights: too many tensors");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("save_weights: cannot open '" + path + "' for writing");
  out.write(kMagic, 4);
  put_u32(out, static_cast<uint32_t>(store.size()));
  for (const auto& [name, tensor] : store) {
    if (name.empty() || name.size() > std::numeric_limits<uint16_t>::max())
      throw ValueError("save_weights: bad tensor name length");
    if (tensor.dims.empty() || tensor.dims.size() > 255)
      throw ValueError("save_weights: tensor '" + name + "' has unsupported rank");
    if (tensor.data.size() != tensor.value_count())
      throw ShapeError("save_weights: tensor '" + name + "' payload does not match its dims");
    put_u16(out, static_cast<uint16_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    out.put(static_cast<char>(tensor.dims.size()));
    for (uint32_t d : tensor.dims) put_u32(out, d);
    for (float v : tensor.data) put_u32(out, std::bit_cast<uint32_t>(v));
  }
  out.flush();
  if (!out) throw IoError("save_weights: write failed for '" + path + "'");
}

WeightStore load_weights(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_weights: cannot open '" + path + "'");
  char magic[4];
  if (!get_bytes(in, magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw FormatError("load_weights: bad magic, not a BKW1 file");
  uint32_t count = 0;
  if (!get_u32(in, count)) throw FormatError("load_weights: truncated header");

  WeightStore store;
  for (uint32_t t = 0; t < count; ++t) {
    uint16_t name_len = 0;
    if (!get_u16(in, name_len) || name_len == 0)
      throw FormatError("load_weights: truncated tensor header");
    std::string name(name_len, '\0');
    if (!get_bytes(in, name.data(), name_len))
      throw FormatError("load_weights: truncated tensor header");
    char rank_byte = 0;
    if (!get_bytes(in, &rank_byte, 1))
      throw FormatError("load_weights: truncated while reading tensor '" + name + "'");
    const int rank = static_cast<unsigned char>(rank_byte);
    if (rank == 0) throw FormatError("load_weights: tensor '" + name + "' has rank 0");

    NamedTensor tensor;
    tensor.dims.resize(static_cast<size_t>(rank));
    uint64_t values = 1;
    for (int d = 0; d < rank; ++d) {
      if (!get_u32(in, tensor.dims[static_cast<size_t>(d)]))
        throw FormatError("load_weights: truncated while reading tensor '" + name + "'");
      if (tensor.dims[static_cast<size_t>(d)] == 0)
        throw FormatError("load_weights: tensor '" + name + "' has a zero dimension");
      values *= tensor.dims[static_cast<size_t>(d)];
      if (values > kMaxTensorValues)
        throw FormatError("load_weights: tensor '" + name + "' is unreasonably large");
    }
    tensor.data.resize(values);
    for (uint64_t i = 0; i < values; ++i) {
      uint32_t bits = 0;
      if (!get_u32(in, bits))
        throw FormatError("load_weights: truncated while reading tensor '" + name + "'");
      tensor.data[i] = std::bit_cast<float>(bits);
    }
    if (store.count(name) != 0)
      throw FormatError("load_weights: duplicate tensor name '" + name + "'");
    store.emplace(std::move(name), std::move(tensor));
  }
  return store;
}

}  // namespace bokehkit
