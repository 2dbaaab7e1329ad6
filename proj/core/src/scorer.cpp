// Copyright (c) 2026 the ricot authors
// SPDX-License-Identifier: Apache-2.0

#include "ricot/scorer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include "ricot/digest.hpp"
#include "ricot/jsonl.hpp"
#include "ricot/rng.hpp"
#include "ricot/text.hpp"

namespace ricot::scorer {

namespace {

void check_request(const ScoreRequest& request) {
  if (request.candidates.empty()) {
    throw Error("score: empty candidate list");
  }
  for (const auto& c : request.candidates) {
    if (trim(c).empty()) throw Error("score: empty candidate output");
  }
}

json scores_to_json(const std::vector<LogLikelihood>& scores) {
  json arr = json::array();
  for (const auto& s : scores) {
    arr.push_back(json{{"total", s.total}, {"token_count", s.token_count}});
  }
  return arr;
}

}  // namespace

std::vector<std::size_t> rank_by_loglik(const std::vector<LogLikelihood>& scores,
                                        bool per_token_mean) {
  if (scores.empty()) throw Error("rank: empty score list");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  const auto key = [&](std::size_t i) {
    if (!per_token_mean) return scores[i].total;
    return scores[i].total / static_cast<double>(std::max<std::int64_t>(
                                 scores[i].token_count, 1));
  };
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return key(a) > key(b); });
  return order;
}

LogLikelihood lexical_baseline_score(std::string_view instruction,
                                     std::string_view candidate) {
  const auto inst_tokens = tokenize_casefold(instruction);
  const auto cand_tokens = tokenize_casefold(candidate);
  if (inst_tokens.empty() || cand_tokens.empty()) {
    throw Error("lexical_baseline_score: empty input");
  }
  const std::set<std::string> inst_set(inst_tokens.begin(), inst_tokens.end());
  const std::set<std::string> cand_set(cand_tokens.begin(), cand_tokens.end());
  std::size_t overlap = 0;
  for (const auto& t : cand_set) overlap += inst_set.count(t);
  LogLikelihood ll;
  ll.total = std::log((1.0 + static_cast<double>(overlap)) /
                      (1.0 + static_cast<double>(cand_set.size())));
  ll.token_count = static_cast<std::int64_t>(cand_set.size());
  return ll;
}

std::vector<LogLikelihood> LexicalScorer::score(const ScoreRequest& request) {
  check_request(request);
  std::vector<LogLikelihood> out;
  out.reserve(request.candidates.size());
  for (const auto& c : request.candidates) {
    out.push_back(lexical_baseline_score(request.instruction, c));
  }
  return out;
}

std::vector<LogLikelihood> OracleScorer::score(const ScoreRequest& request) {
  check_request(request);
  std::vector<LogLikelihood> out;
  out.reserve(request.candidates.size());
  for (const auto& c : request.candidates) {
    const bool is_target = c == target_;
    const bool high = inverse_ ? !is_target : is_target;
    out.push_back(LogLikelihood{high ? 0.0 : -1.0, 1});
  }
  return out;
}

void RandomScorer::begin_instance(const InstanceContext& ctx) {
  state_ = Rng::derive(seed_, ctx.instance_key);
}

std::vector<LogLikelihood> RandomScorer::score(const ScoreRequest& request) {
  check_request(request);
  Rng rng(state_);
  // Advance the per-instance state so repeated score() calls within one
  // instance (the grouped protocol) stay independent.
  state_ = Rng::derive(state_, "next-call");
  std::vector<LogLikelihood> out;
  out.reserve(request.candidates.size());
  for (std::size_t i = 0; i < request.candidates.size(); ++i) {
    out.push_back(LogLikelihood{rng.unit() - 1.0, 1});
  }
  return out;
}

std::string score_request_digest(const ScoreRequest& request) {
  const json j{{"instruction", request.instruction},
               {"candidates", request.candidates}};
  return sha256_hex(j.dump());
}

ScoreFixture load_score_fixture(std::istream& in) {
  ScoreFixture fixture;
  for_each_jsonl(in, [&](json j, std::size_t line_no) {
    if (!j.is_object() || !j.contains("digest") || !j.contains("scores")) {
      throw DataError("score fixture line " + std::to_string(line_no) +
                      ": expected {digest, scores}");
    }
    std::vector<LogLikelihood> scores;
    for (const auto& s : j["scores"]) {
      scores.push_back(LogLikelihood{s.at("total").get<double>(),
                                     s.at("token_count").get<std::int64_t>()});
    }
    fixture[j["digest"].get<std::string>()] = std::move(scores);
  });
  return fixture;
}

void append_score_fixture_entry(std::ostream& out, const std::string& digest,
                                const std::vector<LogLikelihood>& scores) {
  write_jsonl(out, json{{"digest", digest}, {"scores", scores_to_json(scores)}});
}

FixtureScorer FixtureScorer::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open score fixture " + path);
  return FixtureScorer(load_score_fixture(in));
}

std::vector<LogLikelihood> FixtureScorer::score(const ScoreRequest& request) {
  check_request(request);
  const std::string digest = score_request_digest(request);
  const auto it = entries_.find(digest);
  if (it == entries_.end()) {
    throw ProtocolError("fixture scorer: no recorded response", digest);
  }
  if (it->second.size() != request.candidates.size()) {
    throw ProtocolError("fixture scorer: candidate count mismatch", digest);
  }
  return it->second;
}

std::vector<LogLikelihood> RecordingScorer::score(const ScoreRequest& request) {
  auto scores = inner_->score(request);
  append_score_fixture_entry(sink_, score_request_digest(request), scores);
  return scores;
}

}  // namespace ricot::scorer
