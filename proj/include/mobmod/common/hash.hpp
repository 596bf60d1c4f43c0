#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace mobmod {

/// SHA-1 of salt followed by the raw identifier, as 40 lowercase hex chars.
std::string anonymize(std::string_view salt, std::string_view raw_id);

std::string sha1_hex(std::string_view bytes);

/// FNV-1a, for stable non-cryptographic keys (std::hash is not portable).
constexpr std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace mobmod
