// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gcnm/matrix.hpp"

namespace gcnm {

// Layout: "GCNM1", u64 JSON length, JSON metadata, u64 tensor count, then per
// tensor u32 name length, name, u64 rows, u64 cols, rows*cols doubles.
// Integers and doubles are little-endian.
inline constexpr char kCheckpointMagic[] = "GCNM1";

struct Checkpoint {
  nlohmann::json meta;
  std::vector<std::pair<std::string, Matrix>> tensors;

  const Matrix* find(const std::string& name) const;
};

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
// Throws DataError on a bad header or truncated file.
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace gcnm
