// Copyright (c) 2026 the ricot authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "ricot/catalog.hpp"
#include "ricot/matcher.hpp"
#include "ricot/run_config.hpp"

namespace ricot::cli {

/// Exclusive ownership of an output directory while a command runs. A second
/// command writing the same directory is rejected.
class OutputLock {
 public:
  explicit OutputLock(const std::filesystem::path& output_dir);
  ~OutputLock();
  OutputLock(const OutputLock&) = delete;
  OutputLock& operator=(const OutputLock&) = delete;

 private:
  std::filesystem::path lock_path_;
};

struct PipelineData {
  catalog::Catalog cat;
  std::vector<catalog::UserSequence> sequences;
};

std::filesystem::path artifact_path(const RunConfig& config, const std::string& name);

/// Digest of everything the ingest stage depends on; artifacts carry a stamp
/// file with this digest so unchanged inputs are not recomputed.
std::string ingest_stage_digest(const RunConfig& config);

bool stamp_matches(const std::filesystem::path& stamp_path, const std::string& digest);
void write_stamp(const std::filesystem::path& stamp_path, const std::string& digest);

/// Load catalog + sequences from the output directory, or run
/// ingest -> k-core -> sequences and persist them.
PipelineData ensure_ingested(const RunConfig& config, bool verbose = true);

catalog::LeaveOneOutSplit ensure_loo_split(const RunConfig& config,
                                           const PipelineData& data);
catalog::ProductSearchSplit ensure_search_split(const RunConfig& config,
                                                const PipelineData& data);

/// Retriever index over training-region sequences (each sequence minus its
/// two held-out events).
matcher::RetrieverIndex ensure_retriever_index(const RunConfig& config,
                                               const PipelineData& data);

std::vector<catalog::UserSequence> training_region(
    const std::vector<catalog::UserSequence>& sequences);

}  // namespace ricot::cli
