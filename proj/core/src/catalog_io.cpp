// Copyright (c) 2026 the ricot authors
// SPDX-License-Identifier: Apache-2.0

#include "ricot/catalog_io.hpp"

#include <algorithm>
#include <map>
#include <ostream>

#include "ricot/errors.hpp"
#include "ricot/jsonl.hpp"

namespace ricot::catalog {

namespace {

constexpr int kSchemaVersion = 1;

json header(const std::string& artifact, std::uint64_t seed) {
  return json{{"kind", "header"},
              {"artifact", artifact},
              {"schema_version", kSchemaVersion},
              {"seed", seed}};
}

void expect_header(const json& j, const std::string& artifact) {
  if (!j.is_object() || j.value("kind", "") != "header" ||
      j.value("artifact", "") != artifact) {
    throw DataError("expected a \"" + artifact + "\" header record");
  }
  if (j.value("schema_version", -1) != kSchemaVersion) {
    throw DataError(artifact + ": unsupported schema_version");
  }
}

}  // namespace

void write_catalog(std::ostream& out, const Catalog& cat, std::uint64_t seed) {
  json h = header("catalog", seed);
  h["dataset"] = cat.provenance;
  write_jsonl(out, h);

  std::map<std::string, const ItemRecord*> ordered;
  for (const auto& [id, item] : cat.items) ordered.emplace(id, &item);
  for (const auto& [id, item] : ordered) {
    write_jsonl(out, json{{"kind", "item"},
                          {"item", id},
                          {"title", item->title},
                          {"categories", item->categories}});
  }
  for (const auto& rec : cat.interactions) {
    json j{{"kind", "interaction"},
           {"user", rec.user_id},
           {"item", rec.item_id},
           {"ts", rec.timestamp}};
    if (rec.rating) j["rating"] = *rec.rating;
    if (rec.review_text) j["review"] = *rec.review_text;
    write_jsonl(out, j);
  }
}

Catalog read_catalog(std::istream& in) {
  Catalog cat;
  bool saw_header = false;
  for_each_jsonl(in, [&](json j, std::size_t) {
    if (!saw_header) {
      expect_header(j, "catalog");
      cat.provenance = j.value("dataset", "");
      saw_header = true;
      return;
    }
    const std::string kind = j.value("kind", "");
    if (kind == "item") {
      ItemRecord item;
      item.item_id = j.at("item").get<std::string>();
      item.title = j.at("title").get<std::string>();
      for (const auto& c : j.value("categories", json::array())) {
        item.categories.push_back(c.get<std::string>());
      }
      cat.items.emplace(item.item_id, std::move(item));
    } else if (kind == "interaction") {
      InteractionRecord rec;
      rec.user_id = j.at("user").get<std::string>();
      rec.item_id = j.at("item").get<std::string>();
      rec.timestamp = j.at("ts").get<std::int64_t>();
      if (j.contains("rating")) rec.rating = j["rating"].get<double>();
      if (j.contains("review")) rec.review_text = j["review"].get<std::string>();
      cat.interactions.push_back(std::move(rec));
    } else {
      throw DataError("catalog: unknown record kind \"" + kind + "\"");
    }
  });
  if (!saw_header) throw DataError("catalog: empty artifact");
  return cat;
}

void write_sequences(std::ostream& out, const std::vector<UserSequence>& seqs,
                     std::uint64_t seed, std::size_t max_len) {
  json h = header("sequences", seed);
  h["max_len"] = max_len;
  write_jsonl(out, h);
  for (const auto& seq : seqs) {
    json events = json::array();
    for (const auto& e : seq.events) {
      json ev{{"item", e.item_id}, {"ts", e.timestamp}};
      if (e.review_text) ev["review"] = *e.review_text;
      events.push_back(std::move(ev));
    }
    write_jsonl(out, json{{"kind", "sequence"},
                          {"user", seq.user_id},
                          {"events", std::move(events)}});
  }
}

std::vector<UserSequence> read_sequences(std::istream& in) {
  std::vector<UserSequence> seqs;
  bool saw_header = false;
  for_each_jsonl(in, [&](json j, std::size_t) {
    if (!saw_header) {
      expect_header(j, "sequences");
      saw_header = true;
      return;
    }
    UserSequence seq;
    seq.user_id = j.at("user").get<std::string>();
    for (const auto& ev : j.at("events")) {
      SequenceEvent e;
      e.item_id = ev.at("item").get<std::string>();
      e.timestamp = ev.at("ts").get<std::int64_t>();
      if (ev.contains("review")) e.review_text = ev["review"].get<std::string>();
      seq.events.push_back(std::move(e));
    }
    seqs.push_back(std::move(seq));
  });
  if (!saw_header) throw DataError("sequences: empty artifact");
  return seqs;
}

void write_loo_split(std::ostream& out, const LeaveOneOutSplit& split,
                     const std::vector<UserSequence>& seqs,
                     std::uint64_t seed) {
  json h = header("split", seed);
  h["split_kind"] = "leave_one_out";
  write_jsonl(out, h);

  std::map<std::string, const UserSequence*> by_user;
  for (const auto& s : seqs) by_user.emplace(s.user_id, &s);
  const auto entry = [&](const char* split_name, const HeldOutEvent& e,
                         bool with_review) {
    json j{{"kind", "entry"},
           {"split", split_name},
           {"user", e.user_id},
           {"position", e.position}};
    if (with_review) {
      const auto it = by_user.find(e.user_id);
      if (it != by_user.end() && e.position < it->second->events.size()) {
        const auto& review = it->second->events[e.position].review_text;
        if (review) j["review"] = *review;
      }
    }
    write_jsonl(out, j);
  };
  for (const auto& e : split.train) entry("train", e, false);
  for (const auto& e : split.validation) entry("validation", e, true);
  for (const auto& e : split.test) entry("test", e, true);
  for (const auto& u : split.excluded_users) {
    write_jsonl(out, json{{"kind", "excluded"}, {"user", u}});
  }
}

LeaveOneOutSplit read_loo_split(std::istream& in) {
  LeaveOneOutSplit split;
  bool saw_header = false;
  for_each_jsonl(in, [&](json j, std::size_t) {
    if (!saw_header) {
      expect_header(j, "split");
      if (j.value("split_kind", "") != "leave_one_out") {
        throw DataError("split: expected leave_one_out");
      }
      saw_header = true;
      return;
    }
    const std::string kind = j.value("kind", "");
    if (kind == "excluded") {
      split.excluded_users.push_back(j.at("user").get<std::string>());
      return;
    }
    HeldOutEvent e{j.at("user").get<std::string>(),
                   j.at("position").get<std::size_t>()};
    const std::string which = j.at("split").get<std::string>();
    if (which == "train") {
      split.train.push_back(std::move(e));
    } else if (which == "validation") {
      split.validation.push_back(std::move(e));
    } else if (which == "test") {
      split.test.push_back(std::move(e));
    } else {
      throw DataError("split: unknown bucket \"" + which + "\"");
    }
  });
  if (!saw_header) throw DataError("split: empty artifact");
  return split;
}

void write_search_split(std::ostream& out, const ProductSearchSplit& split) {
  json h = header("split", split.seed);
  h["split_kind"] = "product_search_80_10_10";
  write_jsonl(out, h);
  const auto dump = [&](const char* name, const std::vector<SearchPair>& v) {
    for (const auto& p : v) {
      write_jsonl(out, json{{"kind", "entry"},
                            {"split", name},
                            {"item", p.item_id},
                            {"query", p.query}});
    }
  };
  dump("train", split.train);
  dump("validation", split.validation);
  dump("test", split.test);
}

ProductSearchSplit read_search_split(std::istream& in) {
  ProductSearchSplit split;
  bool saw_header = false;
  for_each_jsonl(in, [&](json j, std::size_t) {
    if (!saw_header) {
      expect_header(j, "split");
      if (j.value("split_kind", "") != "product_search_80_10_10") {
        throw DataError("split: expected product_search_80_10_10");
      }
      split.seed = j.value("seed", 0ull);
      saw_header = true;
      return;
    }
    SearchPair p{j.at("item").get<std::string>(),
                 j.at("query").get<std::string>()};
    const std::string which = j.at("split").get<std::string>();
    if (which == "train") {
      split.train.push_back(std::move(p));
    } else if (which == "validation") {
      split.validation.push_back(std::move(p));
    } else if (which == "test") {
      split.test.push_back(std::move(p));
    } else {
      throw DataError("split: unknown bucket \"" + which + "\"");
    }
  });
  if (!saw_header) throw DataError("split: empty artifact");
  return split;
}

}  // namespace ricot::catalog
