// Copyright (c) 2026 the ricot authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ricot/annotator.hpp"
#include "ricot/matcher.hpp"
#include "ricot/scorer.hpp"
#include "ricot/templates.hpp"

namespace ricot {

/// The single JSON document that drives every command. Environment variables
/// override secrets only (RICOT_TEACHER_API_KEY, RICOT_SCORER_API_KEY),
/// never semantics.
struct RunConfig {
  struct Dataset {
    std::string name;
    std::string interactions_path;
    std::string items_path;
  };
  struct Seeds {
    std::uint64_t pipeline = 1;
    std::uint64_t corpus = 2;
    std::uint64_t eval = 3;
    std::uint64_t search_split = 4;
  };
  struct Teacher {
    /// "fallback", "fixture:<path>" or "http(s)://<base-url>".
    std::string backend = "fallback";
    int max_tokens = 150;
    double temperature = 0.0;
    std::uint64_t max_upstream_calls = UINT64_MAX;
    std::size_t concurrency = 4;
    std::string cache_path;    // empty: in-memory cache
    std::string prompts_path;  // empty: builtin prompt set
    int max_attempts = 3;
    std::int64_t backoff_base_ms = 1000;
  };
  struct ScorerCfg {
    /// "lexical", "mock-oracle", "mock-inverse", "mock-random:<seed>",
    /// "fixture:<path>" or "http(s)://<base-url>".
    std::string backend = "lexical";
    bool per_token_mean = false;
    /// Manifest identity override (defaults to the backend's own identity).
    std::string identity_label;
  };
  struct Pool {
    std::string kind = "uniform";
    std::size_t n = 9;
    double alpha = 0.5;
    std::size_t window = 5;
  };
  struct Eval {
    double skip_threshold = 0.05;
    std::string scenario_id;   // empty: every configured scenario
    std::string template_id;   // empty: validation selection
  };
  struct TemplatesFiles {
    std::string data_path;      // empty: builtin registry
    std::string manifest_path;
  };

  Dataset dataset;
  std::string output_dir = "out";
  int kcore_k = 5;
  std::size_t max_sequence_len = 20;
  Seeds seeds;
  Teacher teacher;
  ScorerCfg scorer_cfg;
  Pool pool;
  std::vector<annotator::ScenarioSpec> scenarios;
  Eval eval_cfg;
  TemplatesFiles templates_files;

  static RunConfig from_json(const json& j);
  static RunConfig load_file(const std::string& path);

  /// Paths that must exist before any command runs.
  void validate_paths() const;
};

/// The seven canonical interaction scenarios, each with the given quota.
std::vector<annotator::ScenarioSpec> default_scenarios(std::size_t quota);

/// nullptr selects the deterministic fallback annotator.
std::shared_ptr<annotator::TeacherClient> make_teacher(const RunConfig::Teacher& cfg);

std::shared_ptr<scorer::Scorer> make_scorer(const RunConfig::ScorerCfg& cfg);

annotator::Annotator make_annotator(const RunConfig& config);

const templates::TemplateRegistry& registry_for(const RunConfig& config);

}  // namespace ricot
