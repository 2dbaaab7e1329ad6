// Copyright (c) 2026 the ricot authors
// SPDX-License-Identifier: Apache-2.0

#include "ricot/catalog.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_set>

#include "ricot/errors.hpp"
#include "ricot/jsonl.hpp"
#include "ricot/rng.hpp"
#include "ricot/text.hpp"

namespace ricot::catalog {

namespace {

void record_error(IngestReport& report, const IngestOptions& options,
                  const std::string& stream_name, std::size_t line_no,
                  const std::string& why) {
  ++report.malformed_lines;
  if (report.errors.size() < options.max_recorded_errors) {
    report.errors.push_back(stream_name + ":" + std::to_string(line_no) +
                            ": " + why);
  }
}

std::optional<InteractionRecord> parse_interaction(const json& j,
                                                   std::string& why) {
  if (!j.is_object()) {
    why = "not an object";
    return std::nullopt;
  }
  InteractionRecord rec;
  if (!j.contains("user") || !j["user"].is_string() ||
      j["user"].get<std::string>().empty()) {
    why = "missing or empty \"user\"";
    return std::nullopt;
  }
  if (!j.contains("item") || !j["item"].is_string() ||
      j["item"].get<std::string>().empty()) {
    why = "missing or empty \"item\"";
    return std::nullopt;
  }
  if (!j.contains("ts") || !j["ts"].is_number_integer()) {
    why = "missing or non-integer \"ts\"";
    return std::nullopt;
  }
  rec.user_id = j["user"].get<std::string>();
  rec.item_id = j["item"].get<std::string>();
  rec.timestamp = j["ts"].get<std::int64_t>();
  if (rec.timestamp < 0) {
    why = "negative \"ts\"";
    return std::nullopt;
  }
  if (j.contains("rating") && !j["rating"].is_null()) {
    if (!j["rating"].is_number()) {
      why = "non-numeric \"rating\"";
      return std::nullopt;
    }
    const double r = j["rating"].get<double>();
    if (r < 1.0 || r > 5.0) {
      why = "\"rating\" outside [1,5]";
      return std::nullopt;
    }
    rec.rating = r;
  }
  if (j.contains("review") && !j["review"].is_null()) {
    if (!j["review"].is_string()) {
      why = "non-string \"review\"";
      return std::nullopt;
    }
    rec.review_text = j["review"].get<std::string>();
  }
  return rec;
}

std::optional<ItemRecord> parse_item(const json& j, std::string& why) {
  if (!j.is_object()) {
    why = "not an object";
    return std::nullopt;
  }
  if (!j.contains("item") || !j["item"].is_string() ||
      j["item"].get<std::string>().empty()) {
    why = "missing or empty \"item\"";
    return std::nullopt;
  }
  if (!j.contains("title") || !j["title"].is_string()) {
    why = "missing \"title\"";
    return std::nullopt;
  }
  ItemRecord rec;
  rec.item_id = j["item"].get<std::string>();
  rec.title = j["title"].get<std::string>();
  if (j.contains("categories") && !j["categories"].is_null()) {
    if (!j["categories"].is_array()) {
      why = "\"categories\" is not an array";
      return std::nullopt;
    }
    for (const auto& c : j["categories"]) {
      if (!c.is_string()) {
        why = "\"categories\" entry is not a string";
        return std::nullopt;
      }
      rec.categories.push_back(c.get<std::string>());
    }
  }
  return rec;
}

}  // namespace

const ItemRecord& Catalog::item(const std::string& item_id) const {
  const auto it = items.find(item_id);
  if (it == items.end()) {
    throw DataError("catalog integrity: unknown item_id \"" + item_id + "\"");
  }
  return it->second;
}

Catalog ingest(std::istream& interaction_source, std::istream& metadata_source,
               IngestReport& report, const IngestOptions& options) {
  Catalog out;
  out.provenance = options.dataset_name;

  for_each_jsonl(
      metadata_source,
      [&](const json& record, std::size_t line_no) {
        ++report.metadata_lines;
        std::string why;
        auto item = parse_item(record, why);
        if (!item) {
          record_error(report, options, "metadata", line_no, why);
          return;
        }
        if (trim(item->title).empty()) {
          ++report.items_without_title;
          return;
        }
        if (!out.items.emplace(item->item_id, *item).second) {
          ++report.duplicate_items;
        }
      },
      [&](const JsonlError& e) {
        ++report.metadata_lines;
        record_error(report, options, "metadata", e.line_no, e.message);
      });

  std::unordered_set<std::string> seen;  // "user\x1fitem\x1fts"
  for_each_jsonl(
      interaction_source,
      [&](const json& record, std::size_t line_no) {
        ++report.interaction_lines;
        std::string why;
        auto rec = parse_interaction(record, why);
        if (!rec) {
          record_error(report, options, "interactions", line_no, why);
          return;
        }
        if (out.items.find(rec->item_id) == out.items.end()) {
          ++report.unknown_item_interactions;
          return;
        }
        std::string key = rec->user_id;
        key.push_back('\x1f');
        key += rec->item_id;
        key.push_back('\x1f');
        key += std::to_string(rec->timestamp);
        if (!seen.insert(std::move(key)).second) {
          ++report.duplicate_interactions;
          return;
        }
        out.interactions.push_back(std::move(*rec));
      },
      [&](const JsonlError& e) {
        ++report.interaction_lines;
        record_error(report, options, "interactions", e.line_no, e.message);
      });

  const std::size_t total = report.interaction_lines + report.metadata_lines;
  if (total > 0) {
    const double rate =
        static_cast<double>(report.malformed_lines) / static_cast<double>(total);
    if (rate > options.max_error_rate) {
      throw DataError("ingest aborted: malformed-line rate " +
                      std::to_string(rate) + " exceeds threshold " +
                      std::to_string(options.max_error_rate));
    }
  }
  return out;
}

Catalog kcore_filter(const Catalog& input, int k) {
  if (k < 1) throw ConfigError("kcore_filter: k must be >= 1");
  const auto uk = static_cast<std::size_t>(k);

  std::vector<InteractionRecord> live = input.interactions;
  for (;;) {
    std::unordered_map<std::string, std::size_t> user_count;
    std::unordered_map<std::string, std::size_t> item_count;
    for (const auto& rec : live) {
      ++user_count[rec.user_id];
      ++item_count[rec.item_id];
    }
    std::vector<InteractionRecord> next;
    next.reserve(live.size());
    for (auto& rec : live) {
      if (user_count[rec.user_id] >= uk && item_count[rec.item_id] >= uk) {
        next.push_back(std::move(rec));
      }
    }
    const bool stable = next.size() == live.size();
    live = std::move(next);
    if (stable) break;
  }

  if (live.empty()) {
    throw EmptyCatalogError("kcore_filter: no interaction survives k=" +
                            std::to_string(k));
  }

  Catalog out;
  out.provenance = input.provenance;
  out.interactions = std::move(live);
  for (const auto& rec : out.interactions) {
    if (out.items.find(rec.item_id) == out.items.end()) {
      out.items.emplace(rec.item_id, input.item(rec.item_id));
    }
  }
  return out;
}

std::vector<UserSequence> build_sequences(const Catalog& input,
                                          std::size_t max_len) {
  if (max_len == 0) throw ConfigError("build_sequences: max_len must be >= 1");
  std::map<std::string, std::vector<SequenceEvent>> per_user;
  for (const auto& rec : input.interactions) {
    per_user[rec.user_id].push_back(
        SequenceEvent{rec.item_id, rec.timestamp, rec.review_text});
  }
  std::vector<UserSequence> out;
  out.reserve(per_user.size());
  for (auto& [user_id, events] : per_user) {
    std::sort(events.begin(), events.end(),
              [](const SequenceEvent& a, const SequenceEvent& b) {
                if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
                return a.item_id < b.item_id;
              });
    if (events.size() > max_len) {
      // Keep the most recent suffix.
      events.erase(events.begin(),
                   events.end() - static_cast<std::ptrdiff_t>(max_len));
    }
    out.push_back(UserSequence{user_id, std::move(events)});
  }
  return out;
}

LeaveOneOutSplit leave_one_out_split(
    const std::vector<UserSequence>& sequences) {
  LeaveOneOutSplit split;
  for (const auto& seq : sequences) {
    const std::size_t n = seq.events.size();
    if (n < 3) {
      split.excluded_users.push_back(seq.user_id);
      continue;
    }
    for (std::size_t pos = 0; pos + 2 < n; ++pos) {
      split.train.push_back(HeldOutEvent{seq.user_id, pos});
    }
    split.validation.push_back(HeldOutEvent{seq.user_id, n - 2});
    split.test.push_back(HeldOutEvent{seq.user_id, n - 1});
  }
  return split;
}

ProductSearchSplit product_search_split(const std::vector<SearchPair>& pairs,
                                        std::uint64_t seed) {
  if (pairs.size() < 10) {
    throw DataError(
        "product_search_split: need at least 10 pairs, got " +
        std::to_string(pairs.size()));
  }

  // Group by item so bucket item sets stay disjoint.
  std::map<std::string, std::vector<SearchPair>> groups;
  for (const auto& p : pairs) groups[p.item_id].push_back(p);
  std::vector<std::string> item_ids;
  item_ids.reserve(groups.size());
  for (const auto& [item_id, _] : groups) item_ids.push_back(item_id);

  Rng rng(Rng::derive(seed, "product_search_split"));
  rng.shuffle(item_ids);

  const auto n = static_cast<double>(pairs.size());
  const auto quota_test = static_cast<std::size_t>(std::llround(0.1 * n));
  const auto quota_valid = static_cast<std::size_t>(std::llround(0.1 * n));

  ProductSearchSplit split;
  split.seed = seed;
  for (const auto& item_id : item_ids) {
    auto& g = groups[item_id];
    if (split.test.size() + g.size() <= quota_test) {
      split.test.insert(split.test.end(), g.begin(), g.end());
    } else if (split.validation.size() + g.size() <= quota_valid) {
      split.validation.insert(split.validation.end(), g.begin(), g.end());
    } else {
      split.train.insert(split.train.end(), g.begin(), g.end());
    }
  }
  return split;
}

}  // namespace ricot::catalog
