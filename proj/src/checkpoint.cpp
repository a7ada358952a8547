#include "mgbr/checkpoint.hpp"

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "mgbr/errors.hpp"

namespace mgbr {

namespace {

constexpr char kMagic[9] = "MGBRCKP1";

std::uint32_t crc32_update(std::uint32_t crc, const void* data, std::size_t len) {
  static const auto table = [] {
    std::array<std::uint32_t, 256> t{};
    for (std::uint32_t i = 0; i < 256; ++i) {
      std::uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  const auto* p = static_cast<const unsigned char*>(data);
  crc = ~crc;
  for (std::size_t i = 0; i < len; ++i) crc = table[(crc ^ p[i]) & 0xFF] ^ (crc >> 8);
  return ~crc;
}

struct CrcWriter {
  std::ofstream out;
  std::uint32_t crc = 0;

  void write(const void* data, std::size_t len) {
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(len));
    crc = crc32_update(crc, data, len);
  }
  template <typename T>
  void write_pod(T v) {
    write(&v, sizeof(T));
  }
  void write_string(const std::string& s) {
    write_pod<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    write(s.data(), s.size());
  }
};

struct CrcReader {
  std::ifstream in;
  std::uint32_t crc = 0;

  void read(void* data, std::size_t len) {
    in.read(static_cast<char*>(data), static_cast<std::streamsize>(len));
    if (!in) throw DataError("checkpoint truncated");
    crc = crc32_update(crc, data, len);
  }
  template <typename T>
  T read_pod() {
    T v;
    read(&v, sizeof(T));
    return v;
  }
  std::string read_string(std::size_t max_len = 1u << 20) {
    const auto len = read_pod<std::uint32_t>();
    if (len > max_len) throw DataError("checkpoint string length implausible");
    std::string s(len, '\0');
    read(s.data(), len);
    return s;
  }
};

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  CrcWriter w;
  w.out.open(path, std::ios::binary);
  if (!w.out) throw DataError("cannot write checkpoint '" + path + "'");
  w.out.write(kMagic, 8);

  w.write_string(ckpt.cfg.to_text());
  w.write_pod<std::int32_t>(ckpt.n_users);
  w.write_pod<std::int32_t>(ckpt.n_items);
  w.write_pod<std::uint64_t>(ckpt.params.size());
  for (const auto& [name, t] : ckpt.params.entries()) {
    w.write_string(name);
    w.write_pod<std::uint32_t>(static_cast<std::uint32_t>(t.shape().size()));
    for (int s : t.shape()) w.write_pod<std::int32_t>(s);
    w.write_pod<std::uint64_t>(t.numel());
    w.write(t.vals().data(), t.numel() * sizeof(float));
  }
  w.out.write(reinterpret_cast<const char*>(&w.crc), sizeof(w.crc));
  if (!w.out) throw DataError("checkpoint write failed for '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  CrcReader r;
  r.in.open(path, std::ios::binary);
  if (!r.in) throw DataError("cannot open checkpoint '" + path + "'");
  char magic[8];
  r.in.read(magic, 8);
  if (!r.in || std::memcmp(magic, kMagic, 8) != 0) {
    throw DataError("'" + path + "' is not a checkpoint (bad magic)");
  }

  Checkpoint ckpt;
  const std::string cfg_text = r.read_string();
  ckpt.cfg.apply_text(cfg_text);
  ckpt.n_users = r.read_pod<std::int32_t>();
  ckpt.n_items = r.read_pod<std::int32_t>();
  const auto count = r.read_pod<std::uint64_t>();
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::string name = r.read_string();
    const auto ndim = r.read_pod<std::uint32_t>();
    if (ndim > 2) throw DataError("checkpoint tensor '" + name + "' has impossible rank");
    std::vector<int> shape;
    for (std::uint32_t d = 0; d < ndim; ++d) shape.push_back(r.read_pod<std::int32_t>());
    const auto numel = r.read_pod<std::uint64_t>();
    std::vector<float> vals(numel);
    r.read(vals.data(), numel * sizeof(float));
    ckpt.params.add(name, nc::Tensor(std::move(shape), std::move(vals)));
  }
  std::uint32_t stored = 0;
  r.in.read(reinterpret_cast<char*>(&stored), sizeof(stored));
  if (!r.in || stored != r.crc) {
    throw DataError("checkpoint '" + path + "' failed its integrity check");
  }
  return ckpt;
}

}  // namespace mgbr
