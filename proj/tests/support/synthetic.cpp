// Copyright (c) 2026 the ricot authors
// SPDX-License-Identifier: Apache-2.0

#include "synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <set>
#include <stdexcept>

#include "ricot/rng.hpp"

namespace ricot::testing {

catalog::ItemRecord item(std::string id, std::string title,
                         std::vector<std::string> categories) {
  return catalog::ItemRecord{std::move(id), std::move(title),
                             std::move(categories)};
}

catalog::InteractionRecord interaction(std::string user, std::string item,
                                       std::int64_t ts, std::string review) {
  catalog::InteractionRecord rec;
  rec.user_id = std::move(user);
  rec.item_id = std::move(item);
  rec.timestamp = ts;
  if (!review.empty()) rec.review_text = std::move(review);
  return rec;
}

catalog::Catalog make_catalog(
    std::vector<catalog::ItemRecord> items,
    std::vector<catalog::InteractionRecord> interactions) {
  catalog::Catalog cat;
  cat.provenance = "synthetic";
  for (auto& i : items) cat.items.emplace(i.item_id, std::move(i));
  cat.interactions = std::move(interactions);
  return cat;
}

catalog::Catalog random_catalog(std::uint64_t seed, std::size_t n_users,
                                std::size_t n_items,
                                std::size_t max_interactions) {
  Rng rng(seed);
  std::vector<catalog::ItemRecord> items;
  for (std::size_t i = 0; i < n_items; ++i) {
    items.push_back(item("i" + std::to_string(i),
                         "Item " + std::to_string(i),
                         {"Cat" + std::to_string(i % 5)}));
  }
  std::set<std::string> seen;
  std::vector<catalog::InteractionRecord> interactions;
  for (std::size_t n = 0; n < max_interactions; ++n) {
    const auto u = rng.below(n_users);
    const auto i = rng.below(n_items);
    const auto ts = static_cast<std::int64_t>(rng.below(1000));
    const std::string key = std::to_string(u) + "|" + std::to_string(i) + "|" +
                            std::to_string(ts);
    if (!seen.insert(key).second) continue;
    interactions.push_back(interaction("u" + std::to_string(u),
                                       "i" + std::to_string(i), ts));
  }
  return make_catalog(std::move(items), std::move(interactions));
}

catalog::Catalog uniform_users_catalog(std::size_t n_users, std::size_t n_items,
                                       std::size_t events_per_user,
                                       std::uint64_t seed) {
  Rng rng(seed);
  std::vector<catalog::ItemRecord> items;
  for (std::size_t i = 0; i < n_items; ++i) {
    items.push_back(item("i" + std::to_string(i), "Item " + std::to_string(i),
                         {"Cat" + std::to_string(i % 7), "Leaf" + std::to_string(i % 11)}));
  }
  std::vector<catalog::InteractionRecord> interactions;
  for (std::size_t u = 0; u < n_users; ++u) {
    const auto picks = rng.sample_without_replacement(n_items, events_per_user);
    for (std::size_t e = 0; e < picks.size(); ++e) {
      interactions.push_back(interaction(
          "u" + std::to_string(u), "i" + std::to_string(picks[e]),
          static_cast<std::int64_t>(100 * (e + 1)),
          "Bought item " + std::to_string(picks[e]) + " and liked it."));
    }
  }
  return make_catalog(std::move(items), std::move(interactions));
}

catalog::Catalog family_catalog(std::size_t n_families,
                                std::size_t items_per_family,
                                std::size_t users_per_family,
                                std::size_t events_per_user) {
  std::vector<catalog::ItemRecord> items;
  for (std::size_t f = 0; f < n_families; ++f) {
    const std::string fam = "family" + std::to_string(f);
    const std::string shared = "series" + std::to_string(f);
    for (std::size_t i = 0; i < items_per_family; ++i) {
      items.push_back(item(
          fam + "-i" + std::to_string(i),
          fam + " " + shared + " edition n" + std::to_string(f * 1000 + i),
          {"Goods", fam, shared}));
    }
  }
  std::vector<catalog::InteractionRecord> interactions;
  for (std::size_t f = 0; f < n_families; ++f) {
    const std::string fam = "family" + std::to_string(f);
    Rng rng(Rng::derive(99, fam));
    for (std::size_t u = 0; u < users_per_family; ++u) {
      const auto picks =
          rng.sample_without_replacement(items_per_family, events_per_user);
      for (std::size_t e = 0; e < picks.size(); ++e) {
        interactions.push_back(interaction(
            fam + "-u" + std::to_string(u),
            fam + "-i" + std::to_string(picks[e]),
            static_cast<std::int64_t>(10 * (e + 1)),
            "Wanted more " + fam + " things."));
      }
    }
  }
  return make_catalog(std::move(items), std::move(interactions));
}

std::vector<std::string> interaction_keys(const catalog::Catalog& cat) {
  std::vector<std::string> keys;
  keys.reserve(cat.interactions.size());
  for (const auto& rec : cat.interactions) {
    keys.push_back(rec.user_id + "|" + rec.item_id + "|" +
                   std::to_string(rec.timestamp));
  }
  std::sort(keys.begin(), keys.end());
  return keys;
}

std::vector<std::string> oracle_kcore_keys(const catalog::Catalog& cat, int k) {
  struct Row {
    std::string user, item;
    std::int64_t ts;
    bool alive = true;
  };
  std::vector<Row> rows;
  for (const auto& rec : cat.interactions) {
    rows.push_back(Row{rec.user_id, rec.item_id, rec.timestamp});
  }
  const auto uk = static_cast<std::size_t>(k);
  for (;;) {
    std::map<std::string, std::size_t> user_count;
    std::map<std::string, std::size_t> item_count;
    for (const auto& r : rows) {
      if (!r.alive) continue;
      ++user_count[r.user];
      ++item_count[r.item];
    }
    // Delete one violating node at a time, users first. Any deletion order
    // reaches the same fixpoint; this one differs from the library's
    // simultaneous sweep on purpose.
    std::string victim_user, victim_item;
    for (const auto& [user, count] : user_count) {
      if (count < uk) {
        victim_user = user;
        break;
      }
    }
    if (victim_user.empty()) {
      for (const auto& [it, count] : item_count) {
        if (count < uk) {
          victim_item = it;
          break;
        }
      }
    }
    if (victim_user.empty() && victim_item.empty()) break;
    for (auto& r : rows) {
      if (!r.alive) continue;
      if ((!victim_user.empty() && r.user == victim_user) ||
          (!victim_item.empty() && r.item == victim_item)) {
        r.alive = false;
      }
    }
  }
  std::vector<std::string> keys;
  for (const auto& r : rows) {
    if (r.alive) {
      keys.push_back(r.user + "|" + r.item + "|" + std::to_string(r.ts));
    }
  }
  std::sort(keys.begin(), keys.end());
  return keys;
}

std::size_t oracle_rank(const std::vector<scorer::LogLikelihood>& scores,
                        std::size_t target_index) {
  std::size_t rank = 1;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (i == target_index) continue;
    if (scores[i].total > scores[target_index].total) ++rank;
    if (scores[i].total == scores[target_index].total && i < target_index) {
      ++rank;
    }
  }
  return rank;
}

double oracle_hit(std::size_t rank, int k) {
  return rank <= static_cast<std::size_t>(k) ? 1.0 : 0.0;
}

double oracle_ndcg(std::size_t rank, int k) {
  if (rank > static_cast<std::size_t>(k)) return 0.0;
  return 1.0 / std::log2(static_cast<double>(rank) + 1.0);
}

CommandResult run_command(const std::string& command) {
  CommandResult result;
  FILE* pipe = popen((command + " 2>&1").c_str(), "r");
  if (!pipe) throw std::runtime_error("popen failed for: " + command);
  char buffer[4096];
  while (std::fgets(buffer, sizeof(buffer), pipe)) result.output += buffer;
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

std::string cli_path() {
  if (const char* env = std::getenv("RICOT_CLI")) return env;
  return "./tools/ricot";  // running from the build directory
}

}  // namespace ricot::testing
