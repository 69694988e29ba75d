#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include <openssl/evp.h>

#include "lexichain/error.hpp"

namespace lexichain {

using Sha256 = std::array<uint8_t, 32>;

inline Sha256 sha256(std::string_view data) {
  Sha256 out{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 || len != out.size()) {
    fail(ErrorKind::invalid_input, "SHA-256 digest failed");
  }
  return out;
}

inline std::string sha256_hex(std::string_view data) {
  static constexpr char digits[] = "0123456789abcdef";
  const Sha256 d = sha256(data);
  std::string hex;
  hex.reserve(64);
  for (uint8_t b : d) {
    hex.push_back(digits[b >> 4]);
    hex.push_back(digits[b & 0x0f]);
  }
  return hex;
}

}  // namespace lexichain
