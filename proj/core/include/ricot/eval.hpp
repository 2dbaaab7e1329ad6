// Copyright (c) 2026 the ricot authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ricot/annotator.hpp"
#include "ricot/catalog.hpp"
#include "ricot/matcher.hpp"
#include "ricot/scorer.hpp"
#include "ricot/templates.hpp"

namespace ricot::eval {

/// Where the ground-truth item landed for one instance. No value means the
/// target was eliminated before the final ranking (grouped protocol).
struct RankingOutcome {
  std::optional<std::size_t> target_rank;  // 1-based
  std::size_t pool_size = 0;
  std::string scenario_id;
  std::string user_id;
};

/// 1 iff the target ranks within the top k; an eliminated target never hits.
int hit(const RankingOutcome& outcome, int k);

/// 1/log2(rank+1) when rank <= k, else 0. With leave-one-out there is one
/// relevant item, so the ideal DCG is 1.
double ndcg(const RankingOutcome& outcome, int k);

struct InstanceDetail {
  std::string user_id;
  std::vector<std::string> candidates;  // presentation order
  std::vector<scorer::LogLikelihood> scores;
  std::size_t target_index = 0;
  std::optional<std::size_t> target_rank;
};

struct MetricReport {
  std::string scenario_id;
  std::map<int, double> hr;
  std::map<int, double> ndcg;
  std::size_t n_instances = 0;
  std::size_t skipped = 0;
  bool invalid = false;  // skip rate exceeded the threshold
  std::vector<InstanceDetail> details;  // only with capture_details
};

struct EvalScenario {
  std::string id;
  templates::AspectTags aspects;
  std::string template_id;
};

enum class SplitSlice { Test, Validation };

struct EvalOptions {
  matcher::PoolKind pool = matcher::PoolKind::UniformRandom;
  std::size_t n_negatives = 9;
  double alpha = 0.5;
  std::uint64_t seed = 0;
  double skip_threshold = 0.05;
  bool per_token_mean = false;
  std::vector<int> ks = {1, 3, 5};
  bool capture_details = false;
};

struct EvalContext {
  const catalog::Catalog* cat = nullptr;
  const std::vector<catalog::UserSequence>* sequences = nullptr;
  const templates::TemplateRegistry* registry = nullptr;
  annotator::Annotator* annotator = nullptr;
  /// Required for HardRetrieved pools; built from training sequences only.
  const matcher::RetrieverIndex* index = nullptr;
};

/// Assemble the instruction, build the pool, score, rank and average over
/// every eligible user of the chosen slice. Pointwise (T0) templates have no
/// candidate ranking and are rejected. Teacher slots are resolved through
/// the context's annotator, which must be offline (fallback, fixture or warm
/// cache) — evaluation never makes live teacher calls by construction of the
/// backends handed in.
MetricReport evaluate_scenario(const EvalContext& ctx,
                               const EvalScenario& scenario,
                               scorer::Scorer& scr, const EvalOptions& options,
                               SplitSlice slice = SplitSlice::Test);

/// The template (among those matching the aspects) with the best NDCG@5 on
/// the validation slice; ties go to the lexicographically smaller id.
std::string template_selection_on_validation(const EvalContext& ctx,
                                             const std::string& scenario_id,
                                             const templates::AspectTags& aspects,
                                             scorer::Scorer& scr,
                                             const EvalOptions& options);

/// The 100-candidate protocol: a seeded shuffle splits the pool into ten
/// groups of ten, each group's top-scored item survives, and the ten winners
/// are rescored together. The target's final rank is its rank among the
/// winners, or Eliminated when it loses its group.
RankingOutcome grouped_rerank(
    const catalog::Catalog& cat, const matcher::CandidatePool& pool,
    const std::function<std::string(const std::vector<std::string>&)>& assemble,
    scorer::Scorer& scr, std::uint64_t seed, bool per_token_mean = false);

/// grouped_rerank over every eligible user of the slice, aggregated like
/// evaluate_scenario (an eliminated target scores 0 on every metric).
MetricReport evaluate_grouped_scenario(const EvalContext& ctx,
                                       const EvalScenario& scenario,
                                       scorer::Scorer& scr,
                                       const EvalOptions& options,
                                       SplitSlice slice = SplitSlice::Test);

struct HeldoutPoint {
  std::string subset_id;
  std::optional<MetricReport> report;  // absent when no scorer exists
};

/// One report per training-subset id, in order, on a fixed held-out
/// scenario. The factory returns nullptr for subsets without a backend;
/// those points are marked absent and the run continues.
std::vector<HeldoutPoint> heldout_scenario_run(
    const EvalContext& ctx, const std::vector<std::string>& subset_ids,
    const std::function<std::shared_ptr<scorer::Scorer>(const std::string&)>&
        scorer_factory,
    const EvalScenario& scenario, const EvalOptions& options);

/// Line-delimited {"subset_id", "metrics"} records for plotting.
void write_curve(std::ostream& out, const std::vector<HeldoutPoint>& points);

/// Same protocol on a second, fully preprocessed catalog; the manifest is
/// tagged with the source and target dataset names.
MetricReport cross_domain_eval(const EvalContext& ctx_b,
                               const EvalScenario& scenario,
                               scorer::Scorer& scr, const EvalOptions& options);

/// The evaluation manifest written next to every run.
json manifest_for(const MetricReport& report, const EvalScenario& scenario,
                  const std::string& scorer_identity, const EvalOptions& options,
                  const std::string& source_dataset = {},
                  const std::string& target_dataset = {});

}  // namespace ricot::eval
