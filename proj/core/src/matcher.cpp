// Copyright (c) 2026 the ricot authors
// SPDX-License-Identifier: Apache-2.0

#include "ricot/matcher.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <set>
#include <unordered_set>

#include "ricot/errors.hpp"
#include "ricot/jsonl.hpp"
#include "ricot/rng.hpp"
#include "ricot/text.hpp"

namespace ricot::matcher {

std::string to_string(PoolKind k) {
  switch (k) {
    case PoolKind::UniformRandom: return "uniform_random";
    case PoolKind::HardRetrieved: return "hard_retrieved";
    case PoolKind::LargeUniform: return "large_uniform";
  }
  return "?";
}

PoolKind parse_pool_kind(std::string_view s) {
  if (s == "uniform_random" || s == "uniform") return PoolKind::UniformRandom;
  if (s == "hard_retrieved" || s == "hard") return PoolKind::HardRetrieved;
  if (s == "large_uniform" || s == "large") return PoolKind::LargeUniform;
  throw ConfigError("pool kind: unknown value \"" + std::string(s) + "\"");
}

double RetrieverIndex::cooccurrence_count(const std::string& a,
                                          const std::string& b) const {
  const auto it = cooccurrence.find(a);
  if (it == cooccurrence.end()) return 0.0;
  const auto jt = it->second.find(b);
  return jt == it->second.end() ? 0.0 : jt->second;
}

namespace {

std::vector<std::string> eligible_items(const catalog::Catalog& cat,
                                        const std::vector<std::string>& history,
                                        const std::string& target_item_id) {
  std::unordered_set<std::string> excluded(history.begin(), history.end());
  excluded.insert(target_item_id);
  std::vector<std::string> out;
  out.reserve(cat.items.size());
  for (const auto& [item_id, _] : cat.items) {
    if (excluded.find(item_id) == excluded.end()) out.push_back(item_id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

CandidatePool uniform_pool(const catalog::Catalog& cat,
                           const std::vector<std::string>& history,
                           const std::string& target_item_id, std::size_t n,
                           std::uint64_t seed, PoolKind kind) {
  const auto eligible = eligible_items(cat, history, target_item_id);
  if (eligible.size() < n) {
    throw DataError("negative sampling: need " + std::to_string(n) +
                    " eligible items, have " + std::to_string(eligible.size()));
  }
  Rng rng(seed);
  const auto picks = rng.sample_without_replacement(eligible.size(), n);
  CandidatePool pool;
  pool.target_item_id = target_item_id;
  pool.kind = kind;
  pool.seed = seed;
  pool.negatives.reserve(n);
  for (const auto idx : picks) pool.negatives.push_back(eligible[idx]);
  return pool;
}

}  // namespace

CandidatePool sample_uniform_pool(const catalog::Catalog& cat,
                                  const std::vector<std::string>& history,
                                  const std::string& target_item_id,
                                  std::size_t n, std::uint64_t seed) {
  return uniform_pool(cat, history, target_item_id, n, seed,
                      PoolKind::UniformRandom);
}

CandidatePool sample_large_pool(const catalog::Catalog& cat,
                                const std::vector<std::string>& history,
                                const std::string& target_item_id,
                                std::size_t n, std::uint64_t seed) {
  return uniform_pool(cat, history, target_item_id, n, seed,
                      PoolKind::LargeUniform);
}

RetrieverIndex build_retriever_index(
    const std::vector<catalog::UserSequence>& training_sequences,
    const catalog::Catalog& cat, std::size_t window) {
  if (window == 0) throw ConfigError("retriever window must be >= 1");
  RetrieverIndex index;
  index.window = window;

  for (const auto& seq : training_sequences) {
    const auto& ev = seq.events;
    for (std::size_t i = 0; i < ev.size(); ++i) {
      const std::size_t hi = std::min(ev.size(), i + window + 1);
      for (std::size_t j = i + 1; j < hi; ++j) {
        if (ev[i].item_id == ev[j].item_id) continue;
        index.cooccurrence[ev[i].item_id][ev[j].item_id] += 1.0;
        index.cooccurrence[ev[j].item_id][ev[i].item_id] += 1.0;
      }
    }
  }

  // tf-idf over titles; df counts distinct titles containing a term.
  std::unordered_map<std::string, std::size_t> df;
  std::unordered_map<std::string, std::vector<std::string>> item_tokens;
  for (const auto& [item_id, item] : cat.items) {
    auto tokens = tokenize_casefold(item.title);
    std::set<std::string> distinct(tokens.begin(), tokens.end());
    for (const auto& t : distinct) ++df[t];
    item_tokens.emplace(item_id, std::move(tokens));
  }
  const double n_items = static_cast<double>(cat.items.size());
  for (const auto& [item_id, tokens] : item_tokens) {
    std::unordered_map<std::string, double> tf;
    for (const auto& t : tokens) tf[t] += 1.0;
    auto& weights = index.title_weights[item_id];
    double norm_sq = 0.0;
    for (const auto& [term, count] : tf) {
      const double idf = std::log(n_items / static_cast<double>(df[term]));
      const double w = count * idf;
      weights[term] = w;
      norm_sq += w * w;
    }
    index.weight_norms[item_id] = std::sqrt(norm_sq);
  }
  return index;
}

namespace {

/// Cosine between an item's weight vector and an explicit (vector, norm).
double cosine_against(const RetrieverIndex& index, const std::string& item_id,
                      const std::unordered_map<std::string, double>& reference,
                      double reference_norm) {
  const auto it = index.title_weights.find(item_id);
  if (it == index.title_weights.end()) return 0.0;
  const auto norm_it = index.weight_norms.find(item_id);
  const double norm = norm_it == index.weight_norms.end() ? 0.0 : norm_it->second;
  if (norm == 0.0 || reference_norm == 0.0) return 0.0;
  double dot = 0.0;
  for (const auto& [term, w] : it->second) {
    const auto rt = reference.find(term);
    if (rt != reference.end()) dot += w * rt->second;
  }
  return dot / (norm * reference_norm);
}

}  // namespace

CandidatePool retrieve_hard_negatives(const RetrieverIndex& index,
                                      const catalog::Catalog& cat,
                                      const std::vector<std::string>& history,
                                      const std::string& target_item_id,
                                      std::size_t n, double alpha,
                                      std::uint64_t seed) {
  if (history.empty()) {
    throw DataError("retrieve_hard_negatives: empty history");
  }
  if (alpha < 0.0 || alpha > 1.0) {
    throw ConfigError("retrieve_hard_negatives: alpha outside [0,1]");
  }
  const auto eligible = eligible_items(cat, history, target_item_id);

  // Mean history title-weight vector.
  std::unordered_map<std::string, double> mean_weights;
  for (const auto& h : history) {
    const auto it = index.title_weights.find(h);
    if (it == index.title_weights.end()) continue;
    for (const auto& [term, w] : it->second) mean_weights[term] += w;
  }
  const double inv = 1.0 / static_cast<double>(history.size());
  double mean_norm_sq = 0.0;
  for (auto& [term, w] : mean_weights) {
    w *= inv;
    mean_norm_sq += w * w;
  }
  const double mean_norm = std::sqrt(mean_norm_sq);

  std::vector<double> cooc(eligible.size(), 0.0);
  double max_cooc = 0.0;
  for (std::size_t i = 0; i < eligible.size(); ++i) {
    double sum = 0.0;
    for (const auto& h : history) {
      sum += index.cooccurrence_count(eligible[i], h);
    }
    cooc[i] = sum;
    max_cooc = std::max(max_cooc, sum);
  }

  struct Scored {
    double score;
    const std::string* item_id;
  };
  std::vector<Scored> scored;
  scored.reserve(eligible.size());
  for (std::size_t i = 0; i < eligible.size(); ++i) {
    const double ncooc = max_cooc > 0.0 ? cooc[i] / max_cooc : 0.0;
    const double cos =
        cosine_against(index, eligible[i], mean_weights, mean_norm);
    const double score = alpha * ncooc + (1.0 - alpha) * cos;
    if (score > 0.0) scored.push_back(Scored{score, &eligible[i]});
  }
  std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
    if (a.score != b.score) return a.score > b.score;
    return *a.item_id < *b.item_id;
  });

  CandidatePool pool;
  pool.target_item_id = target_item_id;
  pool.kind = PoolKind::HardRetrieved;
  pool.seed = seed;
  for (std::size_t i = 0; i < scored.size() && pool.negatives.size() < n; ++i) {
    pool.negatives.push_back(*scored[i].item_id);
  }

  if (pool.negatives.size() < n) {
    pool.padded_with_uniform = true;
    std::unordered_set<std::string> taken(pool.negatives.begin(),
                                          pool.negatives.end());
    std::vector<std::string> rest;
    for (const auto& item_id : eligible) {
      if (taken.find(item_id) == taken.end()) rest.push_back(item_id);
    }
    if (pool.negatives.size() + rest.size() < n) {
      throw DataError("retrieve_hard_negatives: not enough eligible items");
    }
    Rng rng(Rng::derive(seed, "hard-pad"));
    const auto picks =
        rng.sample_without_replacement(rest.size(), n - pool.negatives.size());
    for (const auto idx : picks) pool.negatives.push_back(rest[idx]);
  }
  return pool;
}

void write_retriever_index(std::ostream& out, const RetrieverIndex& index) {
  write_jsonl(out, json{{"kind", "header"},
                        {"artifact", "retriever_index"},
                        {"schema_version", 1},
                        {"window", index.window}});
  // Canonical order keeps the artifact byte-stable.
  std::map<std::string, const std::unordered_map<std::string, double>*> cooc;
  for (const auto& [a, row] : index.cooccurrence) cooc.emplace(a, &row);
  for (const auto& [a, row] : cooc) {
    std::map<std::string, double> ordered(row->begin(), row->end());
    for (const auto& [b, count] : ordered) {
      if (a < b) {
        write_jsonl(out, json{{"kind", "cooc"}, {"a", a}, {"b", b}, {"count", count}});
      }
    }
  }
  std::map<std::string, const std::unordered_map<std::string, double>*> weights;
  for (const auto& [item, row] : index.title_weights) weights.emplace(item, &row);
  for (const auto& [item, row] : weights) {
    const json terms(std::map<std::string, double>(row->begin(), row->end()));
    write_jsonl(out, json{{"kind", "weights"}, {"item", item}, {"terms", terms}});
  }
}

RetrieverIndex read_retriever_index(std::istream& in) {
  RetrieverIndex index;
  bool saw_header = false;
  for_each_jsonl(in, [&](json j, std::size_t) {
    if (!saw_header) {
      if (j.value("artifact", "") != "retriever_index" ||
          j.value("schema_version", -1) != 1) {
        throw DataError("retriever index: bad header");
      }
      index.window = j.at("window").get<std::size_t>();
      saw_header = true;
      return;
    }
    const std::string kind = j.value("kind", "");
    if (kind == "cooc") {
      const auto a = j.at("a").get<std::string>();
      const auto b = j.at("b").get<std::string>();
      const auto count = j.at("count").get<double>();
      index.cooccurrence[a][b] = count;
      index.cooccurrence[b][a] = count;
    } else if (kind == "weights") {
      const auto item = j.at("item").get<std::string>();
      auto& row = index.title_weights[item];
      double norm_sq = 0.0;
      for (const auto& [term, w] : j.at("terms").items()) {
        const double weight = w.get<double>();
        row[term] = weight;
        norm_sq += weight * weight;
      }
      index.weight_norms[item] = std::sqrt(norm_sq);
    } else {
      throw DataError("retriever index: unknown record kind \"" + kind + "\"");
    }
  });
  if (!saw_header) throw DataError("retriever index: empty artifact");
  return index;
}

}  // namespace ricot::matcher
