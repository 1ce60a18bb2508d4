#include "gunl/numerics/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "gunl/errors.hpp"

namespace gunl {

namespace {

std::filesystem::path with_ext(const std::filesystem::path& stem, const char* ext) {
  return stem.string() + ext;
}

std::uint64_t to_le(std::uint64_t x) {
  if constexpr (std::endian::native == std::endian::little) return x;
  else return __builtin_bswap64(x);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& stem, const ParamStore& params,
                     const CheckpointMeta& meta) {
  std::ofstream manifest(with_ext(stem, ".manifest"));
  std::ofstream bin(with_ext(stem, ".bin"), std::ios::binary);
  if (!manifest || !bin) throw LoadError("cannot write checkpoint " + stem.string());
  for (const auto& [k, v] : meta) {
    if (k.find_first_of("=\n") != std::string::npos || v.find('\n') != std::string::npos) {
      throw ContractError("checkpoint metadata key/value contains a separator: " + k);
    }
    manifest << '#' << k << '=' << v << '\n';
  }
  std::size_t offset = 0;
  for (const auto& [name, slot] : params.slots()) {
    manifest << name << ' ' << slot.value.rows() << 'x' << slot.value.cols() << ' ' << offset << '\n';
    for (double v : slot.value.values()) {
      const std::uint64_t le = to_le(std::bit_cast<std::uint64_t>(v));
      bin.write(reinterpret_cast<const char*>(&le), sizeof le);
    }
    offset += slot.value.size();
  }
  if (!manifest || !bin) throw LoadError("short write on checkpoint " + stem.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& stem) {
  std::ifstream manifest(with_ext(stem, ".manifest"));
  std::ifstream bin(with_ext(stem, ".bin"), std::ios::binary);
  if (!manifest || !bin) throw LoadError("missing checkpoint " + stem.string());

  std::vector<char> raw((std::istreambuf_iterator<char>(bin)), std::istreambuf_iterator<char>());
  if (raw.size() % sizeof(std::uint64_t) != 0) throw LoadError("truncated checkpoint data " + stem.string());
  const std::size_t total = raw.size() / sizeof(std::uint64_t);

  Checkpoint ck;
  std::string line;
  std::size_t expected_offset = 0;
  while (std::getline(manifest, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw LoadError("bad metadata line in " + stem.string());
      ck.meta[line.substr(1, eq - 1)] = line.substr(eq + 1);
      continue;
    }
    std::istringstream ls(line);
    std::string name, shape;
    std::size_t offset = 0;
    if (!(ls >> name >> shape >> offset)) throw LoadError("bad manifest line '" + line + "'");
    const auto x = shape.find('x');
    if (x == std::string::npos) throw LoadError("bad shape '" + shape + "'");
    std::size_t rows = 0, cols = 0;
    try {
      rows = std::stoull(shape.substr(0, x));
      cols = std::stoull(shape.substr(x + 1));
    } catch (const std::exception&) {
      throw LoadError("bad shape '" + shape + "'");
    }
    if (offset != expected_offset || offset + rows * cols > total) {
      throw LoadError("checkpoint " + stem.string() + ": tensor '" + name + "' out of bounds");
    }
    Dense d(rows, cols);
    for (std::size_t k = 0; k < d.size(); ++k) {
      std::uint64_t le;
      std::memcpy(&le, raw.data() + (offset + k) * sizeof le, sizeof le);
      d.data()[k] = std::bit_cast<double>(to_le(le));
    }
    ck.params.add(name, std::move(d));
    expected_offset = offset + rows * cols;
  }
  if (expected_offset != total) throw LoadError("checkpoint " + stem.string() + ": trailing data");
  return ck;
}

}  // namespace gunl
