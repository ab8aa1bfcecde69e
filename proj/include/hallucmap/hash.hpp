#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace hallucmap {

/// Lowercase hex SHA-256 of the bytes of `data`.
std::string sha256_hex(std::string_view data);

/// First eight bytes of SHA-256 as a big-endian integer; a stable 64-bit key
/// for strings (record ids, texts) that does not depend on std::hash.
std::uint64_t stable_hash64(std::string_view data);

}  // namespace hallucmap
