// Copyright (c) 2026 the ricot authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ricot/run_config.hpp"

namespace ricot::cli {

int cmd_ingest(const RunConfig& config);
int cmd_split(const RunConfig& config);
int cmd_annotate(const RunConfig& config);
int cmd_corpus(const RunConfig& config);

struct AuditArgs {
  std::size_t n_per_kind = 100;
  std::uint64_t seed = 0;  // 0: derive from config seeds
  std::string aggregate_path;  // aggregate an answered sheet instead
};
int cmd_audit(const RunConfig& config, const AuditArgs& args);

struct EvalArgs {
  std::string scenario_id;
  std::string pool;
  std::string scorer;
  std::string template_id;
  bool grouped = false;
  bool plot = false;
  /// "subset_id=path/to/score_fixture.jsonl" or "subset_id=absent".
  std::vector<std::string> heldout_subsets;
  std::string record_fixture;
  std::string manifest_out;
  std::string cross_interactions;
  std::string cross_items;
  std::string cross_name;
};
int cmd_eval(RunConfig config, const EvalArgs& args);

int cmd_serve_fixture(const std::string& fixtures_path, const std::string& host,
                      int port);

}  // namespace ricot::cli
