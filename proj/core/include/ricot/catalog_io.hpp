// Copyright (c) 2026 the ricot authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>

#include "ricot/catalog.hpp"

namespace ricot::catalog {

// Line-delimited JSON artifacts. Every file starts with a header record
// carrying the artifact kind, schema version and the generation seed.

void write_catalog(std::ostream& out, const Catalog& cat, std::uint64_t seed);
Catalog read_catalog(std::istream& in);

void write_sequences(std::ostream& out, const std::vector<UserSequence>& seqs,
                     std::uint64_t seed, std::size_t max_len);
std::vector<UserSequence> read_sequences(std::istream& in);

/// The held-out review text travels with validation/test entries so that
/// evaluation-time intention slots need no catalog lookup.
void write_loo_split(std::ostream& out, const LeaveOneOutSplit& split,
                     const std::vector<UserSequence>& seqs, std::uint64_t seed);
LeaveOneOutSplit read_loo_split(std::istream& in);

void write_search_split(std::ostream& out, const ProductSearchSplit& split);
ProductSearchSplit read_search_split(std::istream& in);

}  // namespace ricot::catalog
