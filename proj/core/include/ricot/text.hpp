// Copyright (c) 2026 the ricot authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace ricot {

std::string trim(std::string_view s);

/// Lowercase ASCII letters; other bytes pass through.
std::string to_lower_ascii(std::string_view s);

/// Replace every run of whitespace (including newlines) with one space,
/// then trim.
std::string collapse_whitespace(std::string_view s);

/// Whitespace-split tokens, case-folded.
std::vector<std::string> tokenize_casefold(std::string_view s);

/// Number of whitespace-separated words.
std::size_t word_count(std::string_view s);

/// The first sentence: everything up to and including the first '.', '!'
/// or '?'. Falls back to the trimmed input when no terminator exists.
std::string first_sentence(std::string_view s);

}  // namespace ricot
