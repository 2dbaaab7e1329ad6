// Copyright (c) 2026 the ricot authors
// SPDX-License-Identifier: Apache-2.0

#include "pipeline.hpp"

#include <fstream>
#include <iostream>

#include "ricot/catalog_io.hpp"
#include "ricot/digest.hpp"
#include "ricot/errors.hpp"
#include "ricot/jsonl.hpp"

namespace ricot::cli {

namespace fs = std::filesystem;

OutputLock::OutputLock(const fs::path& output_dir) {
  fs::create_directories(output_dir);
  lock_path_ = output_dir / ".ricot.lock";
  std::error_code ec;
  if (fs::exists(lock_path_, ec)) {
    throw Error("output directory is locked by another command: " +
                lock_path_.string() + " (remove it if that run is dead)");
  }
  std::ofstream lock(lock_path_);
  if (!lock) throw Error("cannot create lock file " + lock_path_.string());
  lock << "pid " << ::getpid() << "\n";
}

OutputLock::~OutputLock() {
  std::error_code ec;
  fs::remove(lock_path_, ec);
}

fs::path artifact_path(const RunConfig& config, const std::string& name) {
  return fs::path(config.output_dir) / name;
}

std::string ingest_stage_digest(const RunConfig& config) {
  std::string payload = "ingest-v1|";
  payload += config.dataset.name + "|";
  payload += std::to_string(config.kcore_k) + "|";
  payload += std::to_string(config.max_sequence_len) + "|";
  payload += sha256_hex(read_file(config.dataset.interactions_path)) + "|";
  payload += sha256_hex(read_file(config.dataset.items_path));
  return sha256_hex(payload);
}

bool stamp_matches(const fs::path& stamp_path, const std::string& digest) {
  std::ifstream in(stamp_path);
  if (!in) return false;
  std::string stored;
  std::getline(in, stored);
  return stored == digest;
}

void write_stamp(const fs::path& stamp_path, const std::string& digest) {
  std::ofstream out(stamp_path);
  if (!out) throw Error("cannot write stamp " + stamp_path.string());
  out << digest << "\n";
}

PipelineData ensure_ingested(const RunConfig& config, bool verbose) {
  const auto catalog_path = artifact_path(config, "catalog.jsonl");
  const auto sequences_path = artifact_path(config, "sequences.jsonl");
  const auto stamp_path = artifact_path(config, "catalog.stamp");
  const std::string digest = ingest_stage_digest(config);

  PipelineData data;
  if (stamp_matches(stamp_path, digest) && fs::exists(catalog_path) &&
      fs::exists(sequences_path)) {
    std::ifstream cat_in(catalog_path);
    data.cat = catalog::read_catalog(cat_in);
    std::ifstream seq_in(sequences_path);
    data.sequences = catalog::read_sequences(seq_in);
    if (verbose) {
      std::cout << "ingest: up to date (" << data.cat.interactions.size()
                << " interactions, " << data.sequences.size() << " users)\n";
    }
    return data;
  }

  catalog::IngestReport report;
  catalog::IngestOptions options;
  options.dataset_name = config.dataset.name;
  std::ifstream interactions(config.dataset.interactions_path);
  if (!interactions) {
    throw ConfigError("dataset.interactions: cannot open " +
                      config.dataset.interactions_path);
  }
  std::ifstream items(config.dataset.items_path);
  if (!items) {
    throw ConfigError("dataset.items: cannot open " + config.dataset.items_path);
  }
  auto raw = catalog::ingest(interactions, items, report, options);
  data.cat = catalog::kcore_filter(raw, config.kcore_k);
  data.sequences = catalog::build_sequences(data.cat, config.max_sequence_len);

  {
    std::ofstream out(catalog_path);
    catalog::write_catalog(out, data.cat, config.seeds.pipeline);
  }
  {
    std::ofstream out(sequences_path);
    catalog::write_sequences(out, data.sequences, config.seeds.pipeline,
                             config.max_sequence_len);
  }
  if (!report.errors.empty()) {
    std::ofstream err(artifact_path(config, "ingest_errors.txt"));
    for (const auto& e : report.errors) err << e << "\n";
  }
  write_stamp(stamp_path, digest);

  if (verbose) {
    std::cout << "ingest: " << report.interaction_lines << " interaction lines, "
              << report.metadata_lines << " metadata lines\n"
              << "  malformed " << report.malformed_lines << ", duplicates "
              << report.duplicate_interactions << ", unknown-item "
              << report.unknown_item_interactions << ", untitled items "
              << report.items_without_title << "\n"
              << "  after " << config.kcore_k << "-core: "
              << data.cat.interactions.size() << " interactions, "
              << data.cat.items.size() << " items, " << data.sequences.size()
              << " users\n";
  }
  return data;
}

catalog::LeaveOneOutSplit ensure_loo_split(const RunConfig& config,
                                           const PipelineData& data) {
  const auto path = artifact_path(config, "split_loo.jsonl");
  const auto stamp_path = artifact_path(config, "split_loo.stamp");
  const std::string digest = sha256_hex(ingest_stage_digest(config) + "|loo-v1");
  if (stamp_matches(stamp_path, digest) && fs::exists(path)) {
    std::ifstream in(path);
    return catalog::read_loo_split(in);
  }
  auto split = catalog::leave_one_out_split(data.sequences);
  std::ofstream out(path);
  catalog::write_loo_split(out, split, data.sequences, config.seeds.pipeline);
  write_stamp(stamp_path, digest);
  return split;
}

catalog::ProductSearchSplit ensure_search_split(const RunConfig& config,
                                                const PipelineData& data) {
  const auto path = artifact_path(config, "split_search.jsonl");
  const auto stamp_path = artifact_path(config, "split_search.stamp");
  const std::string digest =
      sha256_hex(ingest_stage_digest(config) + "|search-v1|" +
                 std::to_string(config.seeds.search_split));
  if (stamp_matches(stamp_path, digest) && fs::exists(path)) {
    std::ifstream in(path);
    return catalog::read_search_split(in);
  }
  // One (item, query) pair per item with categories; the query is the
  // specific-intention rendering of the item's category path.
  std::vector<catalog::SearchPair> pairs;
  std::vector<std::string> item_ids;
  for (const auto& [item_id, item] : data.cat.items) {
    if (!item.categories.empty()) item_ids.push_back(item_id);
  }
  std::sort(item_ids.begin(), item_ids.end());
  for (const auto& item_id : item_ids) {
    pairs.push_back(catalog::SearchPair{
        item_id,
        annotator::Annotator::derive_specific_intention(data.cat.item(item_id))});
  }
  auto split = catalog::product_search_split(pairs, config.seeds.search_split);
  std::ofstream out(path);
  catalog::write_search_split(out, split);
  write_stamp(stamp_path, digest);
  return split;
}

std::vector<catalog::UserSequence> training_region(
    const std::vector<catalog::UserSequence>& sequences) {
  std::vector<catalog::UserSequence> out;
  out.reserve(sequences.size());
  for (const auto& seq : sequences) {
    if (seq.events.size() < 3) continue;
    catalog::UserSequence train;
    train.user_id = seq.user_id;
    train.events.assign(seq.events.begin(), seq.events.end() - 2);
    out.push_back(std::move(train));
  }
  return out;
}

matcher::RetrieverIndex ensure_retriever_index(const RunConfig& config,
                                               const PipelineData& data) {
  const auto path = artifact_path(config, "retriever_index.jsonl");
  const auto stamp_path = artifact_path(config, "retriever_index.stamp");
  const std::string digest =
      sha256_hex(ingest_stage_digest(config) + "|index-v1|" +
                 std::to_string(config.pool.window));
  if (stamp_matches(stamp_path, digest) && fs::exists(path)) {
    std::ifstream in(path);
    return matcher::read_retriever_index(in);
  }
  auto index = matcher::build_retriever_index(training_region(data.sequences),
                                              data.cat, config.pool.window);
  std::ofstream out(path);
  matcher::write_retriever_index(out, index);
  write_stamp(stamp_path, digest);
  return index;
}

}  // namespace ricot::cli
