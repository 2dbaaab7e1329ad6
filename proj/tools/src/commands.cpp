// Copyright (c) 2026 the ricot authors
// SPDX-License-Identifier: Apache-2.0

#include "commands.hpp"

#include <fstream>
#include <iomanip>
#include <iostream>

#include "pipeline.hpp"
#include "ricot/catalog_io.hpp"
#include "ricot/eval.hpp"
#include "ricot/fixture_server.hpp"
#include "ricot/jsonl.hpp"
#include "ricot/rng.hpp"
#include "svg_plot.hpp"

namespace ricot::cli {

namespace fs = std::filesystem;

namespace {

annotator::GenerationConfig generation_config(const RunConfig& config) {
  annotator::GenerationConfig gen;
  gen.scenarios = config.scenarios;
  gen.seed = config.seeds.corpus;
  gen.rerank_negatives = config.pool.n;
  return gen;
}

void print_metrics_line(const std::string& label,
                        const eval::MetricReport& report) {
  std::cout << std::left << std::setw(24) << label << std::fixed
            << std::setprecision(4);
  for (const int k : {1, 3, 5}) {
    std::cout << "  hr@" << k << "=" << report.hr.at(k);
  }
  for (const int k : {1, 3, 5}) {
    std::cout << "  ndcg@" << k << "=" << report.ndcg.at(k);
  }
  std::cout << "  n=" << report.n_instances << " skipped=" << report.skipped;
  if (report.invalid) std::cout << "  INVALID";
  std::cout << "\n";
}

}  // namespace

int cmd_ingest(const RunConfig& config) {
  OutputLock lock(config.output_dir);
  ensure_ingested(config);
  return 0;
}

int cmd_split(const RunConfig& config) {
  OutputLock lock(config.output_dir);
  const auto data = ensure_ingested(config);
  const auto loo = ensure_loo_split(config, data);
  std::cout << "leave-one-out: " << loo.test.size() << " test users, "
            << loo.train.size() << " train events, "
            << loo.excluded_users.size() << " excluded (shorter than 3)\n";
  try {
    const auto search = ensure_search_split(config, data);
    std::cout << "product search: " << search.train.size() << "/"
              << search.validation.size() << "/" << search.test.size()
              << " train/validation/test pairs\n";
  } catch (const DataError& e) {
    std::cout << "product search: skipped (" << e.what() << ")\n";
  }
  return 0;
}

int cmd_annotate(const RunConfig& config) {
  OutputLock lock(config.output_dir);
  const auto data = ensure_ingested(config);
  auto annot = make_annotator(config);
  const auto& registry = registry_for(config);
  const auto stats =
      annotator::warm_cache(generation_config(config), data.cat, data.sequences,
                            registry, annot, config.teacher.concurrency);
  write_json_file(artifact_path(config, "annotate_stats.json").string(),
                  stats.to_json());
  std::cout << "annotate: " << stats.tasks << " tasks, "
            << stats.upstream_calls << " upstream calls, " << stats.failures
            << " failures\n";
  return 0;
}

int cmd_corpus(const RunConfig& config) {
  OutputLock lock(config.output_dir);
  const auto data = ensure_ingested(config);
  auto annot = make_annotator(config);
  const auto& registry = registry_for(config);

  const auto corpus_path = artifact_path(config, "corpus.jsonl");
  std::ofstream out(corpus_path);
  if (!out) throw Error("cannot write " + corpus_path.string());
  const auto stats = annotator::generate_corpus(
      generation_config(config), data.cat, data.sequences, registry, annot, out);
  out.close();
  write_json_file(artifact_path(config, "corpus_stats.json").string(),
                  stats.to_json());

  std::cout << "corpus rows                     " << stats.total << "\n"
            << "  - preference-describing       " << stats.preference_describing
            << "\n"
            << "  - intention-describing        " << stats.intention_describing
            << "\n"
            << "ave. instruction length (words) " << std::fixed
            << std::setprecision(1) << stats.mean_instruction_words << "\n"
            << "skipped                         " << stats.skipped << "\n"
            << "teacher upstream calls          " << stats.upstream_calls << "\n";
  for (const auto& [scenario, count] : stats.per_scenario) {
    std::cout << "  scenario " << std::left << std::setw(22) << scenario
              << count << "\n";
  }
  if (stats.partial) {
    std::cout << "WARNING: teacher budget exhausted; corpus is PARTIAL (see "
                 "the marker line)\n";
  }
  return 0;
}

int cmd_audit(const RunConfig& config, const AuditArgs& args) {
  if (!args.aggregate_path.empty()) {
    std::ifstream sheet(args.aggregate_path);
    if (!sheet) throw Error("cannot open sheet " + args.aggregate_path);
    const auto agg = annotator::aggregate_audit(sheet);
    for (const auto& [kind, per_question] : agg.counts) {
      std::cout << kind << ":\n";
      for (std::size_t i = 0; i < per_question.size(); ++i) {
        const auto [yes, answered] = per_question[i];
        std::cout << "  " << annotator::kAuditQuestions[i] << "  ";
        if (answered == 0) {
          std::cout << "(unanswered)\n";
        } else {
          std::cout << std::fixed << std::setprecision(0)
                    << 100.0 * static_cast<double>(yes) /
                           static_cast<double>(answered)
                    << "% (" << yes << "/" << answered << ")\n";
        }
      }
    }
    return 0;
  }

  OutputLock lock(config.output_dir);
  const auto corpus_path = artifact_path(config, "corpus.jsonl");
  std::ifstream corpus(corpus_path);
  if (!corpus) {
    throw Error("no corpus at " + corpus_path.string() + "; run `corpus` first");
  }
  const auto sheet_path = artifact_path(config, "audit_sheet.jsonl");
  std::ofstream sheet(sheet_path);
  const std::uint64_t seed =
      args.seed != 0 ? args.seed : Rng::derive(config.seeds.corpus, "audit");
  const auto stats =
      annotator::audit_sample(corpus, args.n_per_kind, seed, sheet);
  std::cout << "audit sheet: " << stats.preference_rows << " preference + "
            << stats.intention_rows << " intention rows -> "
            << sheet_path.string() << "\n";
  if (stats.short_of_quota) {
    std::cout << "WARNING: corpus holds fewer instances than requested per "
                 "kind; sampled everything available\n";
  }
  return 0;
}

namespace {

struct EvalSetup {
  PipelineData data;
  matcher::RetrieverIndex index;
  bool has_index = false;
};

eval::EvalOptions eval_options(const RunConfig& config) {
  eval::EvalOptions options;
  options.pool = matcher::parse_pool_kind(config.pool.kind);
  options.n_negatives = config.pool.n;
  options.alpha = config.pool.alpha;
  options.seed = config.seeds.eval;
  options.skip_threshold = config.eval_cfg.skip_threshold;
  options.per_token_mean = config.scorer_cfg.per_token_mean;
  return options;
}

std::shared_ptr<scorer::Scorer> heldout_subset_scorer(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos) {
    throw ConfigError("--heldout expects subset_id=fixture_path, got \"" +
                      spec + "\"");
  }
  const std::string path = spec.substr(eq + 1);
  if (path == "absent") return nullptr;
  return std::make_shared<scorer::FixtureScorer>(
      scorer::FixtureScorer::from_file(path));
}

}  // namespace

int cmd_eval(RunConfig config, const EvalArgs& args) {
  if (!args.pool.empty()) config.pool.kind = args.pool;
  if (!args.scorer.empty()) config.scorer_cfg.backend = args.scorer;
  if (!args.scenario_id.empty()) config.eval_cfg.scenario_id = args.scenario_id;
  if (!args.template_id.empty()) config.eval_cfg.template_id = args.template_id;

  OutputLock lock(config.output_dir);
  auto data = ensure_ingested(config);
  auto annot = make_annotator(config);
  const auto& registry = registry_for(config);
  const auto options = eval_options(config);

  matcher::RetrieverIndex index;
  eval::EvalContext ctx;
  ctx.cat = &data.cat;
  ctx.sequences = &data.sequences;
  ctx.registry = &registry;
  ctx.annotator = &annot;
  if (options.pool == matcher::PoolKind::HardRetrieved) {
    index = ensure_retriever_index(config, data);
    ctx.index = &index;
  }

  auto scr = make_scorer(config.scorer_cfg);
  std::ofstream recording_sink;
  if (!args.record_fixture.empty()) {
    recording_sink.open(args.record_fixture);
    if (!recording_sink) {
      throw Error("cannot write fixture " + args.record_fixture);
    }
    scr = std::make_shared<scorer::RecordingScorer>(scr, recording_sink);
  }

  // Cross-domain: evaluate the same protocol on a second catalog.
  PipelineData cross_data;
  eval::EvalContext cross_ctx;
  const bool cross = !args.cross_interactions.empty();
  if (cross) {
    catalog::IngestReport report;
    catalog::IngestOptions ingest_options;
    ingest_options.dataset_name = args.cross_name;
    std::ifstream interactions(args.cross_interactions);
    if (!interactions) {
      throw ConfigError("--cross-interactions: cannot open " +
                        args.cross_interactions);
    }
    std::ifstream items(args.cross_items);
    if (!items) throw ConfigError("--cross-items: cannot open " + args.cross_items);
    auto raw = catalog::ingest(interactions, items, report, ingest_options);
    cross_data.cat = catalog::kcore_filter(raw, config.kcore_k);
    cross_data.sequences =
        catalog::build_sequences(cross_data.cat, config.max_sequence_len);
    cross_ctx = ctx;
    cross_ctx.cat = &cross_data.cat;
    cross_ctx.sequences = &cross_data.sequences;
    cross_ctx.index = nullptr;
  }
  const eval::EvalContext& run_ctx = cross ? cross_ctx : ctx;

  // Which scenarios run.
  std::vector<annotator::ScenarioSpec> selected;
  for (const auto& scenario : config.scenarios) {
    if (!config.eval_cfg.scenario_id.empty() &&
        scenario.id != config.eval_cfg.scenario_id) {
      continue;
    }
    if (scenario.aspects.task_form == templates::TaskForm::T0_Pointwise) {
      if (!config.eval_cfg.scenario_id.empty()) {
        throw ConfigError("scenario " + scenario.id +
                          " is pointwise; it has no candidate ranking");
      }
      continue;
    }
    selected.push_back(scenario);
  }
  if (selected.empty()) {
    throw ConfigError("no scenario to evaluate (unknown --scenario?)");
  }
  if (!args.manifest_out.empty() && selected.size() > 1) {
    throw ConfigError("--out needs a single scenario; pass --scenario too");
  }

  // Held-out-scenario curve over training subsets.
  if (!args.heldout_subsets.empty()) {
    if (selected.size() != 1) {
      throw ConfigError("--heldout needs exactly one --scenario");
    }
    const auto& scenario = selected.front();
    eval::EvalScenario es{scenario.id, scenario.aspects,
                          config.eval_cfg.template_id};
    if (es.template_id.empty()) {
      es.template_id =
          registry.select(scenario.aspects).front().template_id;
    }
    std::vector<std::string> subset_ids;
    std::map<std::string, std::string> subset_specs;
    for (const auto& spec : args.heldout_subsets) {
      const auto eq = spec.find('=');
      subset_ids.push_back(spec.substr(0, eq));
      subset_specs[subset_ids.back()] = spec;
    }
    const auto points = eval::heldout_scenario_run(
        run_ctx, subset_ids,
        [&](const std::string& id) {
          return heldout_subset_scorer(subset_specs.at(id));
        },
        es, options);
    const auto curve_path = artifact_path(config, "curve.jsonl");
    std::ofstream curve(curve_path);
    eval::write_curve(curve, points);
    std::cout << "curve: " << points.size() << " points -> "
              << curve_path.string() << "\n";
    if (args.plot) {
      std::vector<std::string> labels;
      CurveSeries hr5{"hr@5", {}};
      CurveSeries ndcg5{"ndcg@5", {}};
      for (const auto& p : points) {
        if (!p.report) continue;
        labels.push_back(p.subset_id);
        hr5.values.push_back(p.report->hr.at(5));
        ndcg5.values.push_back(p.report->ndcg.at(5));
      }
      const auto svg_path = artifact_path(config, "curve.svg");
      std::ofstream svg(svg_path);
      write_curve_svg(svg, labels, {hr5, ndcg5});
      std::cout << "plot: " << svg_path.string() << "\n";
    }
    return 0;
  }

  bool any_invalid = false;
  for (const auto& scenario : selected) {
    eval::EvalScenario es{scenario.id, scenario.aspects,
                          config.eval_cfg.template_id};
    if (es.template_id.empty()) {
      es.template_id = eval::template_selection_on_validation(
          run_ctx, scenario.id, scenario.aspects, *scr, options);
    }
    const auto report =
        args.grouped
            ? eval::evaluate_grouped_scenario(run_ctx, es, *scr, options)
            : eval::evaluate_scenario(run_ctx, es, *scr, options);
    any_invalid = any_invalid || report.invalid;

    json manifest = eval::manifest_for(
        report, es, scr->identity(), options,
        cross ? config.dataset.name : std::string{},
        cross ? args.cross_name : std::string{});
    manifest["protocol"] = args.grouped ? "grouped" : "single";
    const std::string name = args.manifest_out.empty()
                                 ? artifact_path(config,
                                                 "eval_" + scenario.id +
                                                     (args.grouped ? "_grouped"
                                                                   : "") +
                                                     ".json")
                                       .string()
                                 : args.manifest_out;
    write_json_file(name, manifest);
    print_metrics_line(scenario.id, report);
  }
  return any_invalid ? 4 : 0;
}

int cmd_serve_fixture(const std::string& fixtures_path, const std::string& host,
                      int port) {
  std::ifstream in(fixtures_path);
  if (!in) throw Error("cannot open fixtures " + fixtures_path);
  scorer::FixtureScoreServer server(scorer::load_score_fixture(in));
  const int bound = server.bind(host, port);
  std::cout << "SERVE {\"host\":\"" << host << "\",\"port\":" << bound << "}"
            << std::endl;
  server.run();
  return 0;
}

}  // namespace ricot::cli
