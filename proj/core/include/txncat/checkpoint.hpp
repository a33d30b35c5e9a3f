#pragma once

#include <cstdint>
#include <filesystem>

#include "txncat/model.hpp"

namespace txncat {

/// A model plus the integrity hashes of the vocabulary and taxonomy it was
/// trained against. Loading verifies nothing by itself; callers compare the
/// hashes against the files they are about to use.
struct Checkpoint {
  Model model;
  std::uint64_t vocab_hash = 0;
  std::uint64_t taxonomy_hash = 0;
};

/// Byte layout (documented in docs/formats.md): a line-oriented UTF-8 header
/// ("txncat-checkpoint v1", config fields, hashes, one "tensor <name> <rows>
/// <cols>" line per weight in visit order, then "data"), followed by each
/// tensor's row-major doubles in little-endian byte order.
void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);

Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace txncat
