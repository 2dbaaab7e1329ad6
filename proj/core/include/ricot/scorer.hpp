// Copyright (c) 2026 the ricot authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "ricot/errors.hpp"

namespace ricot::scorer {

/// One instruction and the candidate target outputs to score under it.
struct ScoreRequest {
  std::string instruction;
  std::vector<std::string> candidates;
};

/// Summed per-token log-probability of one candidate output.
struct LogLikelihood {
  double total = 0.0;        // finite, <= 0
  std::int64_t token_count = 1;  // >= 1
};

/// Ground-truth context handed to diagnostic scorers before each instance.
/// Production scorers ignore it; the wire protocol never sees it.
struct InstanceContext {
  std::string instance_key;
  std::string target_output;
};

class Scorer {
 public:
  virtual ~Scorer() = default;

  /// One LogLikelihood per candidate, order-aligned with the request.
  virtual std::vector<LogLikelihood> score(const ScoreRequest& request) = 0;

  virtual void begin_instance(const InstanceContext&) {}

  virtual std::string identity() const = 0;
};

/// Candidate indices sorted by total descending; ties keep the original
/// candidate order. With per_token_mean the comparison key is
/// total/token_count instead of the raw sum.
std::vector<std::size_t> rank_by_loglik(const std::vector<LogLikelihood>& scores,
                                        bool per_token_mean = false);

/// Offline stand-in for a model backend:
/// total = ln((1 + |tokens(instruction) ∩ tokens(candidate)|) /
///            (1 + |tokens(candidate)|)) over case-folded whitespace token
/// sets; token_count = |tokens(candidate)|.
LogLikelihood lexical_baseline_score(std::string_view instruction,
                                     std::string_view candidate);

class LexicalScorer final : public Scorer {
 public:
  std::vector<LogLikelihood> score(const ScoreRequest& request) override;
  std::string identity() const override { return "lexical"; }
};

/// Diagnostic scorer: the candidate equal to the instance's target scores 0,
/// everything else -1 (or the other way around in inverse mode).
class OracleScorer final : public Scorer {
 public:
  explicit OracleScorer(bool inverse = false) : inverse_(inverse) {}
  std::vector<LogLikelihood> score(const ScoreRequest& request) override;
  void begin_instance(const InstanceContext& ctx) override { target_ = ctx.target_output; }
  std::string identity() const override { return inverse_ ? "mock-inverse" : "mock-oracle"; }

 private:
  bool inverse_ = false;
  std::string target_;
};

/// Diagnostic scorer: i.i.d. uniform scores in [-1, 0). Reseeded per instance
/// from (seed, instance_key), so results do not depend on evaluation order.
class RandomScorer final : public Scorer {
 public:
  explicit RandomScorer(std::uint64_t seed) : seed_(seed), state_(seed) {}
  std::vector<LogLikelihood> score(const ScoreRequest& request) override;
  void begin_instance(const InstanceContext& ctx) override;
  std::string identity() const override {
    return "mock-random:" + std::to_string(seed_);
  }

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
};

/// Canonical digest of a request, used to key fixture files.
std::string score_request_digest(const ScoreRequest& request);

using ScoreFixture = std::unordered_map<std::string, std::vector<LogLikelihood>>;

ScoreFixture load_score_fixture(std::istream& in);
void append_score_fixture_entry(std::ostream& out, const std::string& digest,
                                const std::vector<LogLikelihood>& scores);

/// Replays recorded responses keyed by request digest; unknown requests are
/// protocol errors.
class FixtureScorer final : public Scorer {
 public:
  explicit FixtureScorer(ScoreFixture entries)
      : entries_(std::move(entries)) {}
  static FixtureScorer from_file(const std::string& path);
  std::vector<LogLikelihood> score(const ScoreRequest& request) override;
  std::string identity() const override { return "fixture"; }
  std::size_t size() const { return entries_.size(); }

 private:
  ScoreFixture entries_;
};

/// Wraps another scorer and records every request/response pair as fixture
/// entries.
class RecordingScorer final : public Scorer {
 public:
  RecordingScorer(std::shared_ptr<Scorer> inner, std::ostream& sink)
      : inner_(std::move(inner)), sink_(sink) {}
  std::vector<LogLikelihood> score(const ScoreRequest& request) override;
  void begin_instance(const InstanceContext& ctx) override { inner_->begin_instance(ctx); }
  std::string identity() const override { return inner_->identity(); }

 private:
  std::shared_ptr<Scorer> inner_;
  std::ostream& sink_;
};

struct HttpScorerOptions {
  int max_attempts = 3;
  std::chrono::milliseconds backoff_base{1000};
  std::chrono::seconds timeout{30};
  std::string bearer_token;  // sent as Authorization when non-empty
  /// Identity label recorded in evaluation manifests. Defaults to the URL;
  /// overriding it lets a remote fixture backend report as "fixture".
  std::string identity_label;
};

/// Client for the model-server wire protocol:
/// POST {base_url}/v1/score {"instruction": str, "candidates": [str]}
///   -> {"scores": [{"total": number, "token_count": int}]}
class HttpScorer final : public Scorer {
 public:
  explicit HttpScorer(std::string base_url, HttpScorerOptions options = {});
  std::vector<LogLikelihood> score(const ScoreRequest& request) override;
  std::string identity() const override;

 private:
  std::string base_url_;
  HttpScorerOptions options_;
};

}  // namespace ricot::scorer
