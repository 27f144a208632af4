#include "somix/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <stdexcept>

namespace somix {

namespace {
constexpr char magic[5] = {'S', 'O', 'M', 'X', '1'};

void put_bytes(std::string& out, const void* p, std::size_t n) {
  out.append(static_cast<const char*>(p), n);
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void put_doubles(std::string& out, const double* x, std::size_t n) {
  if constexpr (std::endian::native == std::endian::little) {
    put_bytes(out, x, n * sizeof(double));
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      std::uint64_t bits;
      std::memcpy(&bits, &x[i], 8);
      put_u64(out, bits);
    }
  }
}

struct Reader {
  const std::string& buf;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > buf.size()) throw std::runtime_error("checkpoint: truncated file");
  }
  void read_bytes(void* p, std::size_t n) {
    need(n);
    std::memcpy(p, buf.data() + pos, n);
    pos += n;
  }
  std::uint32_t read_u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += 4;
    return v;
  }
  std::uint64_t read_u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += 8;
    return v;
  }
  std::string read_string(std::size_t n) {
    need(n);
    std::string s = buf.substr(pos, n);
    pos += n;
    return s;
  }
  void read_doubles(double* x, std::size_t n) {
    if constexpr (std::endian::native == std::endian::little) {
      read_bytes(x, n * sizeof(double));
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        const std::uint64_t bits = read_u64();
        std::memcpy(&x[i], &bits, 8);
      }
    }
  }
};
}  // namespace

const ArrayRecord& CheckpointData::find(const std::string& name) const {
  for (const auto& a : arrays)
    if (a.name == name) return a;
  throw std::runtime_error("checkpoint: missing array " + name);
}

bool CheckpointData::contains(const std::string& name) const {
  for (const auto& a : arrays)
    if (a.name == name) return true;
  return false;
}

void save_checkpoint_file(const std::string& path, const CheckpointData& data) {
  std::string out;
  put_bytes(out, magic, sizeof magic);
  put_u32(out, data.version);
  const std::string cfg = data.config.dump();  // canonical: keys sorted, stable float repr
  put_u64(out, cfg.size());
  put_bytes(out, cfg.data(), cfg.size());
  put_u64(out, data.arrays.size());
  for (const auto& a : data.arrays) {
    put_u64(out, a.name.size());
    put_bytes(out, a.name.data(), a.name.size());
    put_u32(out, static_cast<std::uint32_t>(a.dims.size()));
    std::size_t count = 1;
    for (std::size_t d : a.dims) {
      put_u64(out, d);
      count *= d;
    }
    if (count != a.data.size())
      throw std::logic_error("checkpoint: dims do not match data for " + a.name);
    put_doubles(out, a.data.data(), a.data.size());
  }

  const std::string tmp = path + ".tmp";
  std::FILE* f = std::fopen(tmp.c_str(), "wb");
  if (!f) throw std::runtime_error("checkpoint: cannot open " + tmp);
  const std::size_t written = std::fwrite(out.data(), 1, out.size(), f);
  const bool closed = std::fclose(f) == 0;
  if (written != out.size() || !closed) {
    std::remove(tmp.c_str());
    throw std::runtime_error("checkpoint: write failed for " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw std::runtime_error("checkpoint: rename failed for " + path);
  }
}

CheckpointData load_checkpoint_file(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw std::runtime_error("checkpoint: cannot open " + path);
  std::string buf;
  char chunk[1 << 16];
  std::size_t got;
  while ((got = std::fread(chunk, 1, sizeof chunk, f)) > 0) buf.append(chunk, got);
  std::fclose(f);

  Reader r{buf};
  char m[sizeof magic];
  r.read_bytes(m, sizeof magic);
  if (std::memcmp(m, magic, sizeof magic) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path);
  CheckpointData data;
  data.version = r.read_u32();
  if (data.version != checkpoint_version)
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(data.version));
  const std::uint64_t cfg_len = r.read_u64();
  const std::string cfg = r.read_string(cfg_len);
  try {
    data.config = nlohmann::json::parse(cfg);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("checkpoint: bad config JSON: ") + e.what());
  }
  const std::uint64_t n_arrays = r.read_u64();
  for (std::uint64_t i = 0; i < n_arrays; ++i) {
    ArrayRecord a;
    const std::uint64_t name_len = r.read_u64();
    if (name_len > (1u << 20)) throw std::runtime_error("checkpoint: absurd name length");
    a.name = r.read_string(name_len);
    const std::uint32_t ndims = r.read_u32();
    if (ndims > 8) throw std::runtime_error("checkpoint: absurd rank for " + a.name);
    std::size_t count = 1;
    for (std::uint32_t k = 0; k < ndims; ++k) {
      const std::uint64_t d = r.read_u64();
      a.dims.push_back(d);
      if (d != 0 && count > buf.size() / d) throw std::runtime_error("checkpoint: absurd dims");
      count *= d;
    }
    a.data.resize(count);
    r.read_doubles(a.data.data(), count);
    data.arrays.push_back(std::move(a));
  }
  if (r.pos != buf.size()) throw std::runtime_error("checkpoint: trailing bytes in " + path);
  return data;
}

}  // namespace somix
