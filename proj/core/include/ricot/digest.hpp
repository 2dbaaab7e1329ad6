// Copyright (c) 2026 the ricot authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>

namespace ricot {

/// SHA-256 of `bytes` as a lowercase hex string.
std::string sha256_hex(std::string_view bytes);

/// First `n` hex characters of sha256_hex, for short artifact stamps.
std::string sha256_hex_prefix(std::string_view bytes, std::size_t n = 12);

}  // namespace ricot
