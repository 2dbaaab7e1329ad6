// Copyright (c) 2026 the ricot authors
// SPDX-License-Identifier: Apache-2.0

#include "ricot/digest.hpp"

#include <openssl/evp.h>

#include <array>
#include <stdexcept>

namespace ricot {

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int md_len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &md_len, EVP_sha256(),
                 nullptr) != 1) {
    throw std::runtime_error("sha256: EVP_Digest failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(static_cast<std::size_t>(md_len) * 2);
  for (unsigned int i = 0; i < md_len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 0x0f]);
  }
  return out;
}

std::string sha256_hex_prefix(std::string_view bytes, std::size_t n) {
  return sha256_hex(bytes).substr(0, n);
}

}  // namespace ricot
