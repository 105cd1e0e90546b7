// SPDX-License-Identifier: Apache-2.0
#include "gcnm/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "gcnm/error.hpp"

namespace gcnm {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T take(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw DataError("checkpoint truncated");
  return v;
}

}  // namespace

const Matrix* Checkpoint::find(const std::string& name) const {
  for (const auto& [n, m] : tensors)
    if (n == name) return &m;
  return nullptr;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out.write(kCheckpointMagic, 5);
  const std::string meta = checkpoint.meta.dump();
  put<std::uint64_t>(out, meta.size());
  out.write(meta.data(), static_cast<std::streamsize>(meta.size()));
  put<std::uint64_t>(out, checkpoint.tensors.size());
  for (const auto& [name, m] : checkpoint.tensors) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint64_t>(out, m.rows());
    put<std::uint64_t>(out, m.cols());
    out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
  }
  if (!out) throw DataError("failed writing checkpoint " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  char magic[5];
  if (!in.read(magic, 5) || std::memcmp(magic, kCheckpointMagic, 5) != 0)
    throw DataError("not a GCNM1 checkpoint: " + path.string());
  Checkpoint cp;
  const auto meta_len = take<std::uint64_t>(in);
  if (meta_len > (1ULL << 32)) throw DataError("checkpoint metadata too large");
  std::string meta(meta_len, '\0');
  if (!in.read(meta.data(), static_cast<std::streamsize>(meta_len))) throw DataError("checkpoint truncated");
  try {
    cp.meta = nlohmann::json::parse(meta);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint metadata is not JSON: ") + e.what());
  }
  const auto count = take<std::uint64_t>(in);
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto name_len = take<std::uint32_t>(in);
    std::string name(name_len, '\0');
    if (!in.read(name.data(), name_len)) throw DataError("checkpoint truncated");
    const auto rows = take<std::uint64_t>(in);
    const auto cols = take<std::uint64_t>(in);
    if (rows * cols > (1ULL << 31)) throw DataError("checkpoint tensor too large: " + name);
    Matrix m(rows, cols);
    if (!in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double))))
      throw DataError("checkpoint truncated");
    cp.tensors.emplace_back(std::move(name), std::move(m));
  }
  return cp;
}

}  // namespace gcnm
