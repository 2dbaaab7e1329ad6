// Copyright (c) 2026 the ricot authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <sstream>

#include "ricot/catalog.hpp"
#include "ricot/eval.hpp"
#include "ricot/matcher.hpp"
#include "ricot/scorer.hpp"
#include "ricot/templates.hpp"
#include "support/synthetic.hpp"

using namespace ricot;
using namespace ricot::testing;

namespace {

void BM_KcoreFilter(benchmark::State& state) {
  const auto cat =
      random_catalog(11, static_cast<std::size_t>(state.range(0)),
                     static_cast<std::size_t>(state.range(0)) / 2,
                     static_cast<std::size_t>(state.range(0)) * 20);
  for (auto _ : state) {
    try {
      benchmark::DoNotOptimize(catalog::kcore_filter(cat, 5));
    } catch (const EmptyCatalogError&) {
    }
  }
}
BENCHMARK(BM_KcoreFilter)->Arg(100)->Arg(1000);

void BM_RegistryLoad(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(templates::TemplateRegistry::builtin().all().size());
  }
}
BENCHMARK(BM_RegistryLoad);

void BM_LexicalScore(benchmark::State& state) {
  scorer::LexicalScorer scorer;
  scorer::ScoreRequest request;
  request.instruction =
      "The user searched for role playing games with a long story";
  for (int i = 0; i < state.range(0); ++i) {
    request.candidates.push_back("Game Title Number " + std::to_string(i) +
                                 " Deluxe");
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(scorer.score(request));
  }
}
BENCHMARK(BM_LexicalScore)->Arg(10)->Arg(100);

void BM_GroupedRerank(benchmark::State& state) {
  std::vector<catalog::ItemRecord> items;
  for (int i = 0; i < 130; ++i) {
    items.push_back(item("i" + std::to_string(i), "Title " + std::to_string(i)));
  }
  const auto cat = make_catalog(std::move(items), {});
  matcher::CandidatePool pool;
  pool.target_item_id = "i0";
  for (int i = 1; i <= 99; ++i) pool.negatives.push_back("i" + std::to_string(i));
  scorer::RandomScorer random(3);
  const auto assemble = [](const std::vector<std::string>& titles) {
    return std::to_string(titles.size());
  };
  std::uint64_t seed = 0;
  for (auto _ : state) {
    random.begin_instance({"t" + std::to_string(seed), ""});
    benchmark::DoNotOptimize(
        eval::grouped_rerank(cat, pool, assemble, random, seed++, false));
  }
}
BENCHMARK(BM_GroupedRerank);

void BM_HardNegativeRetrieval(benchmark::State& state) {
  const auto cat = uniform_users_catalog(50, 200, 8, 4);
  const auto seqs = catalog::build_sequences(cat, 20);
  const auto index = matcher::build_retriever_index(seqs, cat, 5);
  std::vector<std::string> history;
  for (const auto& e : seqs.front().events) history.push_back(e.item_id);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        matcher::retrieve_hard_negatives(index, cat, history, "i0", 9, 0.5, 7));
  }
}
BENCHMARK(BM_HardNegativeRetrieval);

}  // namespace

BENCHMARK_MAIN();
