// Copyright (c) 2026 the ricot authors
// SPDX-License-Identifier: Apache-2.0

#include <CLI11.hpp>

#include <iostream>

#include "commands.hpp"
#include "ricot/errors.hpp"

namespace {

ricot::RunConfig load_config(const std::string& path) {
  auto config = ricot::RunConfig::load_file(path);
  config.validate_paths();
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ricot: recommendation instruction corpora and reranking "
               "evaluation"};
  app.require_subcommand(1);

  std::string config_path = "ricot.json";

  auto* ingest = app.add_subcommand(
      "ingest", "Ingest raw data, k-core filter, build user sequences");
  ingest->add_option("--config", config_path, "Run configuration JSON");

  auto* split = app.add_subcommand(
      "split", "Write leave-one-out and product-search splits");
  split->add_option("--config", config_path, "Run configuration JSON");

  auto* annotate = app.add_subcommand(
      "annotate", "Run teacher-driven slot generation into the cache");
  annotate->add_option("--config", config_path, "Run configuration JSON");

  auto* corpus = app.add_subcommand(
      "corpus", "Generate the instruction corpus and its statistics");
  corpus->add_option("--config", config_path, "Run configuration JSON");

  ricot::cli::AuditArgs audit_args;
  auto* audit = app.add_subcommand(
      "audit", "Emit quality-audit sheets, or aggregate an answered one");
  audit->add_option("--config", config_path, "Run configuration JSON");
  audit->add_option("--per-kind", audit_args.n_per_kind,
                    "Instances sampled per kind");
  audit->add_option("--seed", audit_args.seed, "Sampling seed override");
  audit->add_option("--aggregate", audit_args.aggregate_path,
                    "Aggregate this answered sheet into percentages");

  ricot::cli::EvalArgs eval_args;
  auto* eval = app.add_subcommand(
      "eval", "Run scenario evaluations and write manifests");
  eval->add_option("--config", config_path, "Run configuration JSON");
  eval->add_option("--scenario", eval_args.scenario_id, "Scenario id to run");
  eval->add_option("--pool", eval_args.pool,
                   "Pool kind override: uniform|hard|large");
  eval->add_option("--scorer", eval_args.scorer,
                   "Scorer override: lexical|mock-oracle|mock-inverse|"
                   "mock-random:<seed>|fixture:<path>|http(s)://...");
  eval->add_option("--template", eval_args.template_id,
                   "Template id override (skips validation selection)");
  eval->add_flag("--grouped", eval_args.grouped,
                 "Use the 100-candidate grouped protocol");
  eval->add_flag("--plot", eval_args.plot, "Render curve data to SVG");
  eval->add_option("--heldout", eval_args.heldout_subsets,
                   "Held-out curve point: subset_id=score_fixture.jsonl "
                   "(repeatable; 'absent' marks a missing backend)");
  eval->add_option("--record-fixture", eval_args.record_fixture,
                   "Record every score request/response into this fixture");
  eval->add_option("--out", eval_args.manifest_out,
                   "Manifest output path (single scenario)");
  eval->add_option("--cross-interactions", eval_args.cross_interactions,
                   "Second dataset: interactions JSONL");
  eval->add_option("--cross-items", eval_args.cross_items,
                   "Second dataset: item metadata JSONL");
  eval->add_option("--cross-name", eval_args.cross_name,
                   "Second dataset name for the manifest");

  std::string serve_fixtures;
  std::string serve_host = "127.0.0.1";
  int serve_port = 0;
  auto* serve = app.add_subcommand(
      "serve-fixture", "Host a score fixture behind the /v1/score protocol");
  serve->add_option("--fixtures", serve_fixtures, "Score fixture JSONL")
      ->required();
  serve->add_option("--host", serve_host, "Bind host");
  serve->add_option("--port", serve_port, "Bind port (0 picks a free one)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) return ricot::cli::cmd_ingest(load_config(config_path));
    if (*split) return ricot::cli::cmd_split(load_config(config_path));
    if (*annotate) return ricot::cli::cmd_annotate(load_config(config_path));
    if (*corpus) return ricot::cli::cmd_corpus(load_config(config_path));
    if (*audit) {
      if (!audit_args.aggregate_path.empty()) {
        return ricot::cli::cmd_audit(ricot::RunConfig{}, audit_args);
      }
      return ricot::cli::cmd_audit(load_config(config_path), audit_args);
    }
    if (*eval) return ricot::cli::cmd_eval(load_config(config_path), eval_args);
    if (*serve) {
      return ricot::cli::cmd_serve_fixture(serve_fixtures, serve_host,
                                           serve_port);
    }
  } catch (const ricot::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ricot::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 1;
}
