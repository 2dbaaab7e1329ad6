// Copyright (c) 2026 the ricot authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

namespace ricot::catalog {

/// One behavioral row: a user touched an item at a point in time,
/// optionally leaving a rating and review text.
struct InteractionRecord {
  std::string user_id;
  std::string item_id;
  std::int64_t timestamp = 0;
  std::optional<double> rating;
  std::optional<std::string> review_text;
};

struct ItemRecord {
  std::string item_id;
  std::string title;
  std::vector<std::string> categories;
};

struct Catalog {
  std::unordered_map<std::string, ItemRecord> items;
  std::vector<InteractionRecord> interactions;
  std::string provenance;

  const ItemRecord& item(const std::string& item_id) const;
};

struct SequenceEvent {
  std::string item_id;
  std::int64_t timestamp = 0;
  std::optional<std::string> review_text;
};

/// A user's retained events in chronological order (ties broken by item_id),
/// truncated to the most recent max_len.
struct UserSequence {
  std::string user_id;
  std::vector<SequenceEvent> events;
};

enum class SplitKind { LeaveOneOut, ProductSearch801010 };

/// (user, index-into-UserSequence.events) of a held-out or training event.
struct HeldOutEvent {
  std::string user_id;
  std::size_t position = 0;
};

struct LeaveOneOutSplit {
  std::vector<HeldOutEvent> train;
  std::vector<HeldOutEvent> validation;  // one per user: second-to-last event
  std::vector<HeldOutEvent> test;        // one per user: last event
  std::vector<std::string> excluded_users;  // sequences shorter than 3
};

struct SearchPair {
  std::string item_id;
  std::string query;
};

struct ProductSearchSplit {
  std::vector<SearchPair> train;
  std::vector<SearchPair> validation;
  std::vector<SearchPair> test;
  std::uint64_t seed = 0;
};

using DatasetSplit = std::variant<LeaveOneOutSplit, ProductSearchSplit>;

struct IngestOptions {
  std::string dataset_name;
  /// Abort when more than this fraction of input lines is malformed.
  double max_error_rate = 0.05;
  /// How many per-line error messages to retain verbatim (all are counted).
  std::size_t max_recorded_errors = 50;
};

struct IngestReport {
  std::size_t interaction_lines = 0;
  std::size_t metadata_lines = 0;
  std::size_t malformed_lines = 0;
  std::size_t duplicate_interactions = 0;
  std::size_t duplicate_items = 0;
  std::size_t unknown_item_interactions = 0;
  std::size_t items_without_title = 0;
  std::vector<std::string> errors;  // "interactions:12: <why>"
};

/// Join two line-delimited JSON streams into a Catalog.
///
/// Interaction schema: {"user","item","ts","rating"?,"review"?}; metadata
/// schema: {"item","title","categories"?}. Malformed lines are recorded in
/// the report; exceeding options.max_error_rate aborts with DataError.
/// Duplicate (user,item,ts) triples keep the first occurrence; interactions
/// referencing unknown items and items with blank titles are dropped and
/// counted.
Catalog ingest(std::istream& interaction_source, std::istream& metadata_source,
               IngestReport& report, const IngestOptions& options = {});

/// Iterate user/item removal to the fixpoint where every surviving user and
/// every surviving item has at least k interactions. Items no longer
/// referenced are dropped from the item map. Throws EmptyCatalogError when
/// nothing survives.
Catalog kcore_filter(const Catalog& input, int k = 5);

/// One sequence per user, events ordered by (timestamp, item_id) ascending,
/// keeping only the most recent max_len events. Sequences are returned
/// ordered by user_id.
std::vector<UserSequence> build_sequences(const Catalog& input,
                                          std::size_t max_len = 20);

/// Last event to test, second-to-last to validation, the rest to train.
/// Sequences shorter than 3 are excluded and reported.
LeaveOneOutSplit leave_one_out_split(const std::vector<UserSequence>& sequences);

/// Seeded 80/10/10 partition by pair count (quotas rounded to the nearest
/// count). All pairs of one item land in the same bucket, so bucket item
/// sets are disjoint. Fewer than 10 pairs is an error.
ProductSearchSplit product_search_split(const std::vector<SearchPair>& pairs,
                                        std::uint64_t seed);

}  // namespace ricot::catalog
