#include "ea/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace ea {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format is little-endian; byte swapping is not implemented");

namespace {

constexpr char kMagic[8] = {'E', 'A', 'N', 'M', 'T', '0', '0', '1'};

void write_u64(std::ofstream& os, uint64_t v) { os.write(reinterpret_cast<const char*>(&v), 8); }

uint64_t read_u64(std::ifstream& is) {
  uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), 8);
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const ParamStore& params, const KvMap& meta) {
  std::ofstream os(path, std::ios::binary);
  require(static_cast<bool>(os), "checkpoint: cannot write " + path);
  os.write(kMagic, 8);
  write_u64(os, params.tensors.size());
  for (const auto& [name, m] : params.tensors) {
    write_u64(os, name.size());
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u64(os, m.rows());
    write_u64(os, m.cols());
    os.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * 8));
  }
  require(static_cast<bool>(os), "checkpoint: write failed for " + path);
  save_kv_file(path + ".meta", meta);
}

ParamStore load_checkpoint(const std::string& path, KvMap* meta) {
  std::ifstream is(path, std::ios::binary);
  require(static_cast<bool>(is), "checkpoint: cannot read " + path);
  char magic[8];
  is.read(magic, 8);
  require(is && std::memcmp(magic, kMagic, 8) == 0, "checkpoint: bad magic in " + path);
  ParamStore params;
  uint64_t count = read_u64(is);
  for (uint64_t t = 0; t < count; ++t) {
    uint64_t name_len = read_u64(is);
    std::string name(name_len, '\0');
    is.read(name.data(), static_cast<std::streamsize>(name_len));
    uint64_t rows = read_u64(is);
    uint64_t cols = read_u64(is);
    Matrix& m = params.add(name, rows, cols);
    is.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * 8));
    require(static_cast<bool>(is), "checkpoint: truncated tensor " + name + " in " + path);
  }
  if (meta) *meta = load_kv_file(path + ".meta");
  return params;
}

}  // namespace ea
