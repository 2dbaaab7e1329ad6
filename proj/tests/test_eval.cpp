// Copyright (c) 2026 the ricot authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <memory>
#include <sstream>

#include "ricot/eval.hpp"
#include "ricot/rng.hpp"
#include "support/synthetic.hpp"

using namespace ricot;
using namespace ricot::eval;
using namespace ricot::testing;

namespace {

struct Fixture {
  catalog::Catalog cat;
  std::vector<catalog::UserSequence> sequences;
  std::unique_ptr<annotator::Annotator> annot;
  EvalContext ctx;

  explicit Fixture(std::size_t users = 40, std::size_t items = 40,
                   std::size_t events = 5, std::uint64_t seed = 6) {
    cat = uniform_users_catalog(users, items, events, seed);
    sequences = catalog::build_sequences(cat, 20);
    annot = std::make_unique<annotator::Annotator>(
        annotator::PromptSet::builtin(), nullptr,
        std::make_shared<annotator::AnnotationCache>());
    ctx.cat = &cat;
    ctx.sequences = &sequences;
    ctx.registry = &templates::TemplateRegistry::builtin();
    ctx.annotator = annot.get();
  }
};

EvalScenario seq_rec_scenario() {
  return EvalScenario{"seq_rec", templates::AspectTags::parse("P1", "I0", "T3"),
                      "pref-07"};
}

}  // namespace

TEST_CASE("hit follows the top-k convention, eliminations score zero") {
  RankingOutcome r1{1, 10, "s", "u"};
  RankingOutcome r4{4, 10, "s", "u"};
  RankingOutcome gone{std::nullopt, 100, "s", "u"};
  CHECK(hit(r1, 1) == 1);
  CHECK(hit(r4, 3) == 0);
  CHECK(hit(r4, 5) == 1);
  CHECK(hit(gone, 5) == 0);
  CHECK(ndcg(gone, 5) == 0.0);
}

TEST_CASE("ndcg discounts by 1/log2(rank+1)") {
  CHECK(ndcg({1, 10, "s", "u"}, 1) == doctest::Approx(1.0));
  CHECK(ndcg({1, 10, "s", "u"}, 5) == doctest::Approx(1.0));
  CHECK(ndcg({2, 10, "s", "u"}, 3) ==
        doctest::Approx(1.0 / std::log2(3.0)).epsilon(1e-12));
  CHECK(ndcg({2, 10, "s", "u"}, 3) == doctest::Approx(0.63093).epsilon(1e-4));
  CHECK(ndcg({3, 10, "s", "u"}, 5) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(ndcg({4, 10, "s", "u"}, 3) == 0.0);
}

TEST_CASE("a perfect oracle scorer yields all-ones metrics") {
  Fixture f;
  scorer::OracleScorer oracle(false);
  EvalOptions options;
  options.seed = 41;
  const auto report =
      evaluate_scenario(f.ctx, seq_rec_scenario(), oracle, options);
  CHECK(report.n_instances == 40);
  CHECK(report.skipped == 0);
  for (const int k : {1, 3, 5}) {
    CHECK(report.hr.at(k) == doctest::Approx(1.0));
    CHECK(report.ndcg.at(k) == doctest::Approx(1.0));
  }
  CHECK_FALSE(report.invalid);
}

TEST_CASE("an inverse oracle never ranks the target into the top five") {
  Fixture f;
  scorer::OracleScorer inverse(true);
  EvalOptions options;
  options.seed = 41;
  const auto report =
      evaluate_scenario(f.ctx, seq_rec_scenario(), inverse, options);
  for (const int k : {1, 3, 5}) {
    CHECK(report.hr.at(k) == doctest::Approx(0.0));
    CHECK(report.ndcg.at(k) == doctest::Approx(0.0));
  }
}

TEST_CASE("metric reports agree exactly with the counting oracle") {
  Fixture f(60, 30, 5, 8);
  scorer::RandomScorer random(2024);
  EvalOptions options;
  options.seed = 77;
  options.n_negatives = 11;  // pools of 12
  options.capture_details = true;
  const auto report =
      evaluate_scenario(f.ctx, seq_rec_scenario(), random, options);
  REQUIRE(report.details.size() == report.n_instances);

  std::map<int, double> hit_sum, ndcg_sum;
  for (const auto& d : report.details) {
    const auto rank = oracle_rank(d.scores, d.target_index);
    REQUIRE(d.target_rank == rank);
    for (const int k : {1, 3, 5}) {
      hit_sum[k] += oracle_hit(rank, k);
      ndcg_sum[k] += oracle_ndcg(rank, k);
    }
  }
  const auto n = static_cast<double>(report.n_instances);
  for (const int k : {1, 3, 5}) {
    CHECK(report.hr.at(k) == hit_sum[k] / n);      // exact
    CHECK(report.ndcg.at(k) == ndcg_sum[k] / n);   // exact
  }
}

TEST_CASE("report means equal the arithmetic mean within 1e-12") {
  Fixture f(50, 30, 5, 9);
  scorer::RandomScorer random(5);
  EvalOptions options;
  options.seed = 3;
  options.capture_details = true;
  const auto report =
      evaluate_scenario(f.ctx, seq_rec_scenario(), random, options);
  double sum = 0.0;
  for (const auto& d : report.details) {
    sum += d.target_rank && *d.target_rank <= 5
               ? 1.0 / std::log2(static_cast<double>(*d.target_rank) + 1.0)
               : 0.0;
  }
  CHECK(std::abs(report.ndcg.at(5) -
                 sum / static_cast<double>(report.n_instances)) < 1e-12);
}

TEST_CASE("template selection maximizes validation ndcg@5 with id ties") {
  Fixture f;
  EvalOptions options;
  options.seed = 19;

  scorer::OracleScorer oracle(false);
  // All candidates are perfect under the oracle, so the smallest id wins.
  const auto chosen = template_selection_on_validation(
      f.ctx, "seq_rec", templates::AspectTags::parse("P1", "I0", "T3"), oracle,
      options);
  const auto all =
      f.ctx.registry->select(templates::AspectTags::parse("P1", "I0", "T3"));
  CHECK(chosen == all.front().template_id);

  const auto again = template_selection_on_validation(
      f.ctx, "seq_rec", templates::AspectTags::parse("P1", "I0", "T3"), oracle,
      options);
  CHECK(again == chosen);

  // (P0,I1,T3) has exactly one built-in template; selection must return it.
  const auto only = template_selection_on_validation(
      f.ctx, "vague_search", templates::AspectTags::parse("P0", "I1", "T3"),
      oracle, options);
  CHECK(only == "int-08");

  // (P0,I1,T2) mixes plain, reversal and relatedness templates; selection
  // must consider only the rankable plain one.
  const auto plain_only = template_selection_on_validation(
      f.ctx, "vague_search", templates::AspectTags::parse("P0", "I1", "T2"),
      oracle, options);
  CHECK(plain_only == "int-04");
}

TEST_CASE("free-text templates cannot back a ranking evaluation") {
  Fixture f;
  scorer::OracleScorer oracle(false);
  EvalOptions options;
  options.seed = 1;
  EvalScenario scenario{"rel", templates::AspectTags::parse("P0", "I1", "T2"),
                        "comb-07"};
  CHECK_THROWS_AS(evaluate_scenario(f.ctx, scenario, oracle, options),
                  ConfigError);
}

TEST_CASE("grouped rerank rejects pools that are not exactly 100") {
  Fixture f(4, 130, 4, 10);
  matcher::CandidatePool pool;
  pool.target_item_id = "i0";
  for (int i = 1; i <= 42; ++i) pool.negatives.push_back("i" + std::to_string(i));
  scorer::OracleScorer oracle(false);
  const auto assemble = [](const std::vector<std::string>& titles) {
    return templates::render_title_list(titles);
  };
  CHECK_THROWS_AS(grouped_rerank(f.cat, pool, assemble, oracle, 1, false),
                  DataError);
}

TEST_CASE("grouped rerank: a perfect oracle always lands rank one") {
  Fixture f(4, 130, 4, 10);
  matcher::CandidatePool pool;
  pool.target_item_id = "i0";
  for (int i = 1; i <= 99; ++i) pool.negatives.push_back("i" + std::to_string(i));

  scorer::OracleScorer oracle(false);
  oracle.begin_instance({"u", f.cat.item("i0").title});
  const auto assemble = [](const std::vector<std::string>& titles) {
    return templates::render_title_list(titles);
  };
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const auto outcome = grouped_rerank(f.cat, pool, assemble, oracle, seed, false);
    REQUIRE(outcome.target_rank.has_value());
    CHECK(*outcome.target_rank == 1);
    CHECK(outcome.pool_size == 100);
  }
}

TEST_CASE("grouped rerank is a pure function of pool and seed") {
  Fixture f(4, 130, 4, 10);
  matcher::CandidatePool pool;
  pool.target_item_id = "i0";
  for (int i = 1; i <= 99; ++i) pool.negatives.push_back("i" + std::to_string(i));
  const auto assemble = [](const std::vector<std::string>& titles) {
    return templates::render_title_list(titles);
  };
  scorer::RandomScorer a(7), b(7);
  a.begin_instance({"trial", ""});
  b.begin_instance({"trial", ""});
  const auto out_a = grouped_rerank(f.cat, pool, assemble, a, 99, false);
  const auto out_b = grouped_rerank(f.cat, pool, assemble, b, 99, false);
  CHECK(out_a.target_rank == out_b.target_rank);
}

TEST_CASE("grouped rerank with an inverse oracle eliminates the target") {
  Fixture f(4, 130, 4, 10);
  matcher::CandidatePool pool;
  pool.target_item_id = "i0";
  for (int i = 1; i <= 99; ++i) pool.negatives.push_back("i" + std::to_string(i));
  scorer::OracleScorer inverse(true);
  inverse.begin_instance({"u", f.cat.item("i0").title});
  const auto assemble = [](const std::vector<std::string>& titles) {
    return templates::render_title_list(titles);
  };
  const auto outcome = grouped_rerank(f.cat, pool, assemble, inverse, 4, false);
  CHECK_FALSE(outcome.target_rank.has_value());
  RankingOutcome scored = outcome;
  CHECK(hit(scored, 5) == 0);
  CHECK(ndcg(scored, 5) == 0.0);
}

TEST_CASE("grouped rerank survival is near one in ten under random scores") {
  Fixture f(4, 130, 4, 10);
  matcher::CandidatePool pool;
  pool.target_item_id = "i0";
  for (int i = 1; i <= 99; ++i) pool.negatives.push_back("i" + std::to_string(i));
  const auto assemble = [](const std::vector<std::string>& titles) {
    return std::to_string(titles.size());
  };
  scorer::RandomScorer random(31);
  std::size_t survived = 0;
  const std::size_t trials = 4000;
  for (std::size_t t = 0; t < trials; ++t) {
    random.begin_instance({"trial-" + std::to_string(t), ""});
    const auto outcome = grouped_rerank(f.cat, pool, assemble, random, t, false);
    if (outcome.target_rank) ++survived;
  }
  const double freq = static_cast<double>(survived) / static_cast<double>(trials);
  CHECK(freq == doctest::Approx(0.1).epsilon(0.35));
  CHECK(std::abs(freq - 0.1) < 0.03);
}

TEST_CASE("evaluate_grouped_scenario aggregates outcomes per user") {
  Fixture f(12, 140, 5, 12);
  scorer::OracleScorer oracle(false);
  EvalOptions options;
  options.seed = 7;
  EvalScenario scenario{"vague_personalized",
                        templates::AspectTags::parse("P1", "I1", "T3"),
                        "comb-10"};
  const auto report =
      evaluate_grouped_scenario(f.ctx, scenario, oracle, options);
  CHECK(report.n_instances == 12);
  CHECK(report.hr.at(1) == doctest::Approx(1.0));
  CHECK(report.ndcg.at(5) == doctest::Approx(1.0));
}

TEST_CASE("held-out runs produce one point per subset, in order") {
  Fixture f(20, 30, 5, 14);
  EvalOptions options;
  options.seed = 23;
  const EvalScenario scenario = seq_rec_scenario();

  const auto factory = [&](const std::string& id)
      -> std::shared_ptr<scorer::Scorer> {
    if (id == "missing") return nullptr;
    return std::make_shared<scorer::OracleScorer>(false);
  };
  const auto points = heldout_scenario_run(
      f.ctx, {"p0", "p0+p2", "missing", "all"}, factory, scenario, options);
  REQUIRE(points.size() == 4);
  CHECK(points[0].subset_id == "p0");
  CHECK(points[2].subset_id == "missing");
  CHECK_FALSE(points[2].report.has_value());
  REQUIRE(points[0].report.has_value());
  REQUIRE(points[3].report.has_value());
  // The same scorer for every subset yields identical reports.
  CHECK(points[0].report->hr.at(5) == points[3].report->hr.at(5));
  CHECK(points[0].report->ndcg.at(3) == points[3].report->ndcg.at(3));

  std::ostringstream curve;
  write_curve(curve, points);
  std::istringstream lines(curve.str());
  std::string line;
  std::size_t rows = 0;
  while (std::getline(lines, line)) {
    const auto j = json::parse(line);
    CHECK(j.contains("subset_id"));
    CHECK((j.contains("metrics") || j.value("absent", false)));
    ++rows;
  }
  CHECK(rows == 4);
}

TEST_CASE("cross-domain evaluation runs the same protocol on catalog B") {
  Fixture b(15, 25, 5, 99);
  scorer::OracleScorer oracle(false);
  EvalOptions options;
  options.seed = 55;
  const auto report = cross_domain_eval(b.ctx, seq_rec_scenario(), oracle, options);
  CHECK(report.hr.at(1) == doctest::Approx(1.0));

  const auto manifest = manifest_for(report, seq_rec_scenario(), "mock-oracle",
                                     options, "games", "cds");
  CHECK(manifest.at("source_dataset") == "games");
  CHECK(manifest.at("target_dataset") == "cds");
  CHECK(manifest.at("metrics").at("hr@1") == 1.0);
  CHECK(manifest.at("scorer") == "mock-oracle");
  CHECK(manifest.at("template_id") == "pref-07");
}

TEST_CASE("skip rates above the threshold mark the evaluation invalid") {
  // Sequences of length 2 are skipped; enough of them trips the flag.
  Fixture f(10, 30, 5, 16);
  for (int i = 0; i < 10; ++i) {
    f.sequences.push_back(catalog::UserSequence{
        "short" + std::to_string(i),
        {{"i0", 1, {}}, {"i1", 2, {}}}});
  }
  scorer::OracleScorer oracle(false);
  EvalOptions options;
  options.seed = 2;
  const auto report =
      evaluate_scenario(f.ctx, seq_rec_scenario(), oracle, options);
  CHECK(report.skipped == 10);
  CHECK(report.invalid);
}
