// Copyright (c) 2026 the ricot authors
// SPDX-License-Identifier: Apache-2.0

#include "ricot/eval.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "ricot/jsonl.hpp"
#include "ricot/rng.hpp"

namespace ricot::eval {

using templates::SlotName;
using templates::SlotSource;
using templates::SlotValue;

int hit(const RankingOutcome& outcome, int k) {
  if (!outcome.target_rank) return 0;
  return *outcome.target_rank <= static_cast<std::size_t>(k) ? 1 : 0;
}

double ndcg(const RankingOutcome& outcome, int k) {
  if (!outcome.target_rank) return 0.0;
  const auto rank = *outcome.target_rank;
  if (rank > static_cast<std::size_t>(k)) return 0.0;
  return 1.0 / std::log2(static_cast<double>(rank) + 1.0);
}

namespace {

struct Accumulator {
  std::map<int, double> hit_sum;
  std::map<int, double> ndcg_sum;
  std::size_t n = 0;

  void add(const RankingOutcome& outcome, const std::vector<int>& ks) {
    for (const int k : ks) {
      hit_sum[k] += static_cast<double>(hit(outcome, k));
      ndcg_sum[k] += ndcg(outcome, k);
    }
    ++n;
  }

  void finish(MetricReport& report, const std::vector<int>& ks) const {
    report.n_instances = n;
    for (const int k : ks) {
      const double denom = n > 0 ? static_cast<double>(n) : 1.0;
      report.hr[k] = (n > 0 ? hit_sum.at(k) : 0.0) / denom;
      report.ndcg[k] = (n > 0 ? ndcg_sum.at(k) : 0.0) / denom;
    }
  }
};

struct EvalInstance {
  catalog::UserSequence prefix;
  catalog::SequenceEvent target_event;
};

std::optional<EvalInstance> slice_instance(const catalog::UserSequence& seq,
                                           SplitSlice slice) {
  if (seq.events.size() < 3) return std::nullopt;
  const std::size_t target_idx =
      slice == SplitSlice::Test ? seq.events.size() - 1 : seq.events.size() - 2;
  EvalInstance inst;
  inst.prefix.user_id = seq.user_id;
  inst.prefix.events.assign(
      seq.events.begin(),
      seq.events.begin() + static_cast<std::ptrdiff_t>(target_idx));
  inst.target_event = seq.events[target_idx];
  return inst;
}

std::vector<std::string> item_ids_of(const catalog::UserSequence& seq) {
  std::vector<std::string> out;
  out.reserve(seq.events.size());
  for (const auto& e : seq.events) out.push_back(e.item_id);
  return out;
}

matcher::CandidatePool build_pool(const EvalContext& ctx,
                                  const EvalOptions& options,
                                  const std::string& scope,
                                  const std::vector<std::string>& history_ids,
                                  const std::string& target_item_id) {
  const std::uint64_t pool_seed = Rng::derive(options.seed, "pool|" + scope);
  switch (options.pool) {
    case matcher::PoolKind::UniformRandom:
      return matcher::sample_uniform_pool(*ctx.cat, history_ids, target_item_id,
                                          options.n_negatives, pool_seed);
    case matcher::PoolKind::HardRetrieved:
      if (!ctx.index) {
        throw ConfigError("hard pools need a retriever index in the context");
      }
      return matcher::retrieve_hard_negatives(*ctx.index, *ctx.cat, history_ids,
                                              target_item_id, options.n_negatives,
                                              options.alpha, pool_seed);
    case matcher::PoolKind::LargeUniform:
      return matcher::sample_large_pool(*ctx.cat, history_ids, target_item_id,
                                        99, pool_seed);
  }
  throw ConfigError("unknown pool kind");
}

void check_context(const EvalContext& ctx) {
  if (!ctx.cat || !ctx.sequences || !ctx.registry || !ctx.annotator) {
    throw ConfigError("evaluation context is incomplete");
  }
}

}  // namespace

namespace {

/// Candidate reranking scores item titles as outputs, so only templates
/// whose target is an item title define the protocol (pointwise yes/no and
/// free-text inference templates do not).
bool rankable(const templates::CoarseTemplate& tmpl) {
  return tmpl.target_schema == templates::TargetSchema::TargetItemTitle;
}

}  // namespace

MetricReport evaluate_scenario(const EvalContext& ctx,
                               const EvalScenario& scenario,
                               scorer::Scorer& scr, const EvalOptions& options,
                               SplitSlice slice) {
  check_context(ctx);
  const auto& tmpl = ctx.registry->by_id(scenario.template_id);
  if (!rankable(tmpl)) {
    throw ConfigError("template " + tmpl.template_id +
                      " does not define a candidate ranking (target schema " +
                      templates::to_string(tmpl.target_schema) + ")");
  }

  MetricReport report;
  report.scenario_id = scenario.id;
  Accumulator acc;

  for (const auto& seq : *ctx.sequences) {
    const auto inst = slice_instance(seq, slice);
    if (!inst) {
      ++report.skipped;
      continue;
    }
    const auto& target_item = ctx.cat->item(inst->target_event.item_id);
    const std::string scope = scenario.id + "|" + seq.user_id;

    templates::SlotMap slots;
    try {
      slots = annotator::assemble_common_slots(
          tmpl, inst->prefix, inst->target_event, target_item, *ctx.cat,
          *ctx.annotator);
    } catch (const annotator::SlotUnavailableError&) {
      ++report.skipped;
      continue;
    } catch (const annotator::AnnotationError&) {
      ++report.skipped;
      continue;
    }

    matcher::CandidatePool pool;
    try {
      pool = build_pool(ctx, options, scope, item_ids_of(inst->prefix),
                        target_item.item_id);
    } catch (const DataError&) {
      ++report.skipped;
      continue;
    }

    std::vector<std::string> shown = pool.negatives;
    shown.push_back(target_item.item_id);
    Rng present_rng(Rng::derive(options.seed, "present|" + scope));
    present_rng.shuffle(shown);
    std::vector<std::string> titles;
    titles.reserve(shown.size());
    std::size_t target_index = 0;
    for (std::size_t i = 0; i < shown.size(); ++i) {
      if (shown[i] == target_item.item_id) target_index = i;
      titles.push_back(ctx.cat->item(shown[i]).title);
    }

    const auto placeholders = tmpl.placeholders();
    if (std::find(placeholders.begin(), placeholders.end(),
                  SlotName::CandidateItems) != placeholders.end()) {
      slots[SlotName::CandidateItems] = SlotValue{
          templates::render_title_list(titles), SlotSource::FromCandidateSampler};
    }
    const auto rendered = templates::instantiate(
        tmpl, slots, templates::TargetItemTitle{target_item.title});

    scr.begin_instance({seq.user_id, rendered.target_output});
    const auto scores =
        scr.score({rendered.instruction_text, titles});
    const auto order = scorer::rank_by_loglik(scores, options.per_token_mean);
    RankingOutcome outcome;
    outcome.pool_size = titles.size();
    outcome.scenario_id = scenario.id;
    outcome.user_id = seq.user_id;
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      if (order[pos] == target_index) {
        outcome.target_rank = pos + 1;
        break;
      }
    }
    acc.add(outcome, options.ks);

    if (options.capture_details) {
      report.details.push_back(InstanceDetail{seq.user_id, titles, scores,
                                              target_index,
                                              outcome.target_rank});
    }
  }

  acc.finish(report, options.ks);
  const std::size_t attempted = report.n_instances + report.skipped;
  if (attempted > 0 &&
      static_cast<double>(report.skipped) / static_cast<double>(attempted) >
          options.skip_threshold) {
    report.invalid = true;
  }
  return report;
}

std::string template_selection_on_validation(
    const EvalContext& ctx, const std::string& scenario_id,
    const templates::AspectTags& aspects, scorer::Scorer& scr,
    const EvalOptions& options) {
  check_context(ctx);
  const auto candidates = ctx.registry->select(aspects);
  std::string best_id;
  double best_ndcg = -1.0;
  for (const auto& tmpl : candidates) {
    if (!rankable(tmpl)) continue;
    EvalScenario scenario{scenario_id, aspects, tmpl.template_id};
    const auto report = evaluate_scenario(ctx, scenario, scr, options,
                                          SplitSlice::Validation);
    const double score = report.ndcg.count(5) ? report.ndcg.at(5) : 0.0;
    if (score > best_ndcg ||
        (score == best_ndcg && (best_id.empty() || tmpl.template_id < best_id))) {
      best_ndcg = score;
      best_id = tmpl.template_id;
    }
  }
  if (best_id.empty()) {
    throw templates::NoTemplateError("no rankable template for scenario " +
                                     aspects.to_string());
  }
  return best_id;
}

RankingOutcome grouped_rerank(
    const catalog::Catalog& cat, const matcher::CandidatePool& pool,
    const std::function<std::string(const std::vector<std::string>&)>& assemble,
    scorer::Scorer& scr, std::uint64_t seed, bool per_token_mean) {
  constexpr std::size_t kPoolSize = 100;
  constexpr std::size_t kGroups = 10;
  constexpr std::size_t kGroupSize = kPoolSize / kGroups;
  if (pool.negatives.size() + 1 != kPoolSize) {
    throw DataError("grouped_rerank: pool must hold exactly 100 candidates, "
                    "got " +
                    std::to_string(pool.negatives.size() + 1));
  }

  std::vector<std::string> candidates = pool.negatives;
  candidates.push_back(pool.target_item_id);
  Rng rng(seed);
  rng.shuffle(candidates);

  const auto title_of = [&](const std::string& item_id) {
    return cat.item(item_id).title;
  };

  std::vector<std::string> winners;
  winners.reserve(kGroups);
  for (std::size_t g = 0; g < kGroups; ++g) {
    std::vector<std::string> group(
        candidates.begin() + static_cast<std::ptrdiff_t>(g * kGroupSize),
        candidates.begin() + static_cast<std::ptrdiff_t>((g + 1) * kGroupSize));
    std::vector<std::string> titles;
    titles.reserve(group.size());
    for (const auto& item_id : group) titles.push_back(title_of(item_id));
    const auto scores = scr.score({assemble(titles), titles});
    const auto order = scorer::rank_by_loglik(scores, per_token_mean);
    winners.push_back(group[order.front()]);
  }

  RankingOutcome outcome;
  outcome.pool_size = kPoolSize;
  const auto winner_it =
      std::find(winners.begin(), winners.end(), pool.target_item_id);
  if (winner_it == winners.end()) {
    return outcome;  // eliminated in the group stage
  }

  std::vector<std::string> titles;
  titles.reserve(winners.size());
  for (const auto& item_id : winners) titles.push_back(title_of(item_id));
  const auto scores = scr.score({assemble(titles), titles});
  const auto order = scorer::rank_by_loglik(scores, per_token_mean);
  const std::size_t target_index =
      static_cast<std::size_t>(winner_it - winners.begin());
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    if (order[pos] == target_index) {
      outcome.target_rank = pos + 1;
      break;
    }
  }
  return outcome;
}

MetricReport evaluate_grouped_scenario(const EvalContext& ctx,
                                       const EvalScenario& scenario,
                                       scorer::Scorer& scr,
                                       const EvalOptions& options,
                                       SplitSlice slice) {
  check_context(ctx);
  const auto& tmpl = ctx.registry->by_id(scenario.template_id);
  if (!rankable(tmpl)) {
    throw ConfigError("template " + tmpl.template_id +
                      " does not define a candidate ranking (target schema " +
                      templates::to_string(tmpl.target_schema) + ")");
  }
  const auto placeholders = tmpl.placeholders();
  if (std::find(placeholders.begin(), placeholders.end(),
                SlotName::CandidateItems) == placeholders.end()) {
    throw ConfigError("grouped reranking needs a template with a "
                      "{CandidateItems} slot");
  }

  MetricReport report;
  report.scenario_id = scenario.id;
  Accumulator acc;

  for (const auto& seq : *ctx.sequences) {
    const auto inst = slice_instance(seq, slice);
    if (!inst) {
      ++report.skipped;
      continue;
    }
    const auto& target_item = ctx.cat->item(inst->target_event.item_id);
    const std::string scope = scenario.id + "|" + seq.user_id;

    templates::SlotMap slots;
    matcher::CandidatePool pool;
    try {
      slots = annotator::assemble_common_slots(
          tmpl, inst->prefix, inst->target_event, target_item, *ctx.cat,
          *ctx.annotator);
      pool = matcher::sample_large_pool(*ctx.cat, item_ids_of(inst->prefix),
                                        target_item.item_id, 99,
                                        Rng::derive(options.seed, "pool|" + scope));
    } catch (const annotator::SlotUnavailableError&) {
      ++report.skipped;
      continue;
    } catch (const annotator::AnnotationError&) {
      ++report.skipped;
      continue;
    } catch (const DataError&) {
      ++report.skipped;
      continue;
    }

    const auto assemble = [&](const std::vector<std::string>& titles) {
      templates::SlotMap with_candidates = slots;
      with_candidates[SlotName::CandidateItems] = SlotValue{
          templates::render_title_list(titles), SlotSource::FromCandidateSampler};
      return templates::instantiate(tmpl, with_candidates,
                                    templates::TargetItemTitle{target_item.title})
          .instruction_text;
    };

    scr.begin_instance({seq.user_id, target_item.title});
    auto outcome =
        grouped_rerank(*ctx.cat, pool, assemble, scr,
                       Rng::derive(options.seed, "groups|" + scope),
                       options.per_token_mean);
    outcome.scenario_id = scenario.id;
    outcome.user_id = seq.user_id;
    acc.add(outcome, options.ks);
  }

  acc.finish(report, options.ks);
  const std::size_t attempted = report.n_instances + report.skipped;
  if (attempted > 0 &&
      static_cast<double>(report.skipped) / static_cast<double>(attempted) >
          options.skip_threshold) {
    report.invalid = true;
  }
  return report;
}

std::vector<HeldoutPoint> heldout_scenario_run(
    const EvalContext& ctx, const std::vector<std::string>& subset_ids,
    const std::function<std::shared_ptr<scorer::Scorer>(const std::string&)>&
        scorer_factory,
    const EvalScenario& scenario, const EvalOptions& options) {
  std::vector<HeldoutPoint> points;
  points.reserve(subset_ids.size());
  for (const auto& subset_id : subset_ids) {
    HeldoutPoint point;
    point.subset_id = subset_id;
    const auto scr = scorer_factory(subset_id);
    if (scr) {
      point.report = evaluate_scenario(ctx, scenario, *scr, options);
    }
    points.push_back(std::move(point));
  }
  return points;
}

void write_curve(std::ostream& out, const std::vector<HeldoutPoint>& points) {
  for (const auto& point : points) {
    json j{{"subset_id", point.subset_id}};
    if (point.report) {
      json metrics = json::object();
      for (const auto& [k, v] : point.report->hr) {
        metrics["hr@" + std::to_string(k)] = v;
      }
      for (const auto& [k, v] : point.report->ndcg) {
        metrics["ndcg@" + std::to_string(k)] = v;
      }
      j["metrics"] = std::move(metrics);
    } else {
      j["absent"] = true;
    }
    write_jsonl(out, j);
  }
}

MetricReport cross_domain_eval(const EvalContext& ctx_b,
                               const EvalScenario& scenario,
                               scorer::Scorer& scr, const EvalOptions& options) {
  return evaluate_scenario(ctx_b, scenario, scr, options);
}

json manifest_for(const MetricReport& report, const EvalScenario& scenario,
                  const std::string& scorer_identity, const EvalOptions& options,
                  const std::string& source_dataset,
                  const std::string& target_dataset) {
  json metrics = json::object();
  for (const auto& [k, v] : report.hr) metrics["hr@" + std::to_string(k)] = v;
  for (const auto& [k, v] : report.ndcg) {
    metrics["ndcg@" + std::to_string(k)] = v;
  }
  json j{{"scenario", scenario.id},
         {"template_id", scenario.template_id},
         {"scorer", scorer_identity},
         {"pool_kind", matcher::to_string(options.pool)},
         {"seed", options.seed},
         {"metrics", std::move(metrics)},
         {"n", report.n_instances},
         {"skipped", report.skipped},
         {"invalid", report.invalid}};
  if (!source_dataset.empty()) j["source_dataset"] = source_dataset;
  if (!target_dataset.empty()) j["target_dataset"] = target_dataset;
  return j;
}

}  // namespace ricot::eval
