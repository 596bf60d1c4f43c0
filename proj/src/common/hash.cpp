#include "mobmod/common/hash.hpp"

#include <openssl/evp.h>

#include <stdexcept>

namespace mobmod {

std::string sha1_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha1(), nullptr) != 1) {
    throw std::runtime_error("sha1: digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(static_cast<std::size_t>(length) * 2, '0');
  for (unsigned int i = 0; i < length; ++i) {
    out[2 * i] = kHex[digest[i] >> 4];
    out[2 * i + 1] = kHex[digest[i] & 0x0f];
  }
  return out;
}

std::string anonymize(std::string_view salt, std::string_view raw_id) {
  std::string buffer;
  buffer.reserve(salt.size() + raw_id.size());
  buffer.append(salt);
  buffer.append(raw_id);
  return sha1_hex(buffer);
}

}  // namespace mobmod
