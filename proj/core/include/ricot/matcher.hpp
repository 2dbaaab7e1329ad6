// Copyright (c) 2026 the ricot authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "ricot/catalog.hpp"

namespace ricot::matcher {

enum class PoolKind { UniformRandom, HardRetrieved, LargeUniform };
std::string to_string(PoolKind k);
PoolKind parse_pool_kind(std::string_view s);

/// Negative candidates for one evaluation instance. The target is never a
/// negative, negatives are pairwise distinct, and nothing from the user's
/// history appears.
struct CandidatePool {
  std::string target_item_id;
  std::vector<std::string> negatives;
  PoolKind kind = PoolKind::UniformRandom;
  std::uint64_t seed = 0;
  /// Hard retrieval found fewer than n positively scored items and padded
  /// the rest with uniform negatives.
  bool padded_with_uniform = false;
};

/// Sequential-pattern and title-similarity signals mined from the training
/// split: co-occurrence counts of item pairs within a positional window, and
/// tf-idf weights over catalog titles.
struct RetrieverIndex {
  std::size_t window = 5;
  /// Symmetric counts, stored in both directions.
  std::unordered_map<std::string, std::unordered_map<std::string, double>>
      cooccurrence;
  std::unordered_map<std::string, std::unordered_map<std::string, double>>
      title_weights;
  std::unordered_map<std::string, double> weight_norms;

  double cooccurrence_count(const std::string& a, const std::string& b) const;
};

/// n distinct negatives sampled uniformly without replacement from
/// catalog items excluding the user's history and the target.
CandidatePool sample_uniform_pool(const catalog::Catalog& cat,
                                  const std::vector<std::string>& history,
                                  const std::string& target_item_id,
                                  std::size_t n, std::uint64_t seed);

/// sample_uniform_pool with n defaulting to 99 and kind LargeUniform; with
/// the target added back the pool reaches the 100-candidate protocol size.
CandidatePool sample_large_pool(const catalog::Catalog& cat,
                                const std::vector<std::string>& history,
                                const std::string& target_item_id,
                                std::size_t n, std::uint64_t seed);

/// Build the retriever from training-split sequences only. Pairs of events
/// at distance <= window in one sequence each contribute one co-occurrence;
/// idf uses the ln(N/df) convention.
RetrieverIndex build_retriever_index(
    const std::vector<catalog::UserSequence>& training_sequences,
    const catalog::Catalog& cat, std::size_t window = 5);

/// score(item) = alpha * (co-occurrence with the history, max-normalized over
/// eligible items) + (1-alpha) * cosine(item title weights, mean history
/// title weights). Top-n eligible items by (score desc, item_id asc); items
/// scoring zero are never retrieved, and missing slots are padded with
/// uniform negatives (flagged on the pool).
CandidatePool retrieve_hard_negatives(const RetrieverIndex& index,
                                      const catalog::Catalog& cat,
                                      const std::vector<std::string>& history,
                                      const std::string& target_item_id,
                                      std::size_t n = 9, double alpha = 0.5,
                                      std::uint64_t seed = 0);

void write_retriever_index(std::ostream& out, const RetrieverIndex& index);
RetrieverIndex read_retriever_index(std::istream& in);

}  // namespace ricot::matcher
