// Copyright (c) 2026 the ricot authors
// SPDX-License-Identifier: Apache-2.0

#include <httplib.h>

#include <cmath>
#include <thread>

#include "ricot/jsonl.hpp"
#include "ricot/scorer.hpp"

namespace ricot::scorer {

namespace {

std::vector<LogLikelihood> parse_score_response(const std::string& body,
                                                std::size_t expected) {
  const auto excerpt = [&] { return body.substr(0, 200); };
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("scores") ||
      !j["scores"].is_array()) {
    throw ProtocolError("score response is not {\"scores\": [...]}", excerpt());
  }
  std::vector<LogLikelihood> out;
  for (const auto& s : j["scores"]) {
    if (!s.is_object() || !s.contains("total") || !s.contains("token_count")) {
      throw ProtocolError("score entry missing total/token_count", excerpt());
    }
    LogLikelihood ll{s["total"].get<double>(),
                     s["token_count"].get<std::int64_t>()};
    if (!std::isfinite(ll.total) || ll.token_count < 1) {
      throw ProtocolError("score entry outside the contract", excerpt());
    }
    out.push_back(ll);
  }
  if (out.size() != expected) {
    throw ProtocolError("score count does not match candidate count", excerpt());
  }
  return out;
}

}  // namespace

HttpScorer::HttpScorer(std::string base_url, HttpScorerOptions options)
    : base_url_(std::move(base_url)), options_(std::move(options)) {}

std::string HttpScorer::identity() const {
  return options_.identity_label.empty() ? base_url_ : options_.identity_label;
}

std::vector<LogLikelihood> HttpScorer::score(const ScoreRequest& request) {
  if (request.candidates.empty()) throw Error("score: empty candidate list");
  const json payload{{"instruction", request.instruction},
                     {"candidates", request.candidates}};
  const std::string body = payload.dump();

  std::string last_error;
  for (int attempt = 0; attempt < options_.max_attempts; ++attempt) {
    if (attempt > 0 && options_.backoff_base.count() > 0) {
      std::this_thread::sleep_for(options_.backoff_base * (1 << (attempt - 1)));
    }
    httplib::Client client(base_url_);
    client.set_connection_timeout(options_.timeout.count(), 0);
    client.set_read_timeout(options_.timeout.count(), 0);
    httplib::Headers headers;
    if (!options_.bearer_token.empty()) {
      headers.emplace("Authorization", "Bearer " + options_.bearer_token);
    }
    auto res = client.Post("/v1/score", headers, body, "application/json");
    if (!res) {
      last_error = "transport failure: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 200) {
      return parse_score_response(res->body, request.candidates.size());
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "status " + std::to_string(res->status);
      continue;  // retriable per policy
    }
    throw ProtocolError("score endpoint returned status " +
                            std::to_string(res->status),
                        res->body.substr(0, 200));
  }
  throw TransportError("score request failed after " +
                       std::to_string(options_.max_attempts) +
                       " attempts: " + last_error);
}

}  // namespace ricot::scorer
