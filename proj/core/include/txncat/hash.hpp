#pragma once

#include <cstdint>
#include <string_view>

namespace txncat {

/// 64-bit FNV-1a. Used for checkpoint integrity hashes and the hashing
/// vectorizer buckets.
inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace txncat
