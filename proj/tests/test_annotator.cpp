// Copyright (c) 2026 the ricot authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>
#include <httplib.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ricot/annotator.hpp"
#include "ricot/rng.hpp"
#include "ricot/templates.hpp"
#include "support/synthetic.hpp"

using namespace ricot;
using namespace ricot::annotator;
using namespace ricot::testing;

namespace {

const char* kRe2 = "Resident Evil: Revelations 2 - PlayStation 4";
const char* kRe4 = "Resident Evil 4 - PlayStation 4 Standard Edition";

catalog::Catalog resident_evil_catalog() {
  return make_catalog(
      {item("re2", kRe2, {"Video Games", "PlayStation 4", "Games"}),
       item("re4", kRe4, {"Video Games", "PlayStation 4", "Games"})},
      {});
}

catalog::UserSequence resident_evil_sequence() {
  return catalog::UserSequence{"u", {{"re2", 1, {}}, {"re4", 2, {}}}};
}

Annotator fallback_annotator() {
  return Annotator(PromptSet::builtin(), nullptr,
                   std::make_shared<AnnotationCache>());
}

Annotator::Options fast_options() {
  Annotator::Options options;
  options.backoff_base = std::chrono::milliseconds(0);
  return options;
}

class FlakyTeacher final : public TeacherClient {
 public:
  explicit FlakyTeacher(std::string mode) : mode_(std::move(mode)) {}
  std::string complete(const TeacherRequest&) override {
    ++calls;
    if (mode_ == "empty") return "   ";
    throw TransportError("synthetic outage");
  }
  std::string identity() const override { return "flaky"; }
  int calls = 0;

 private:
  std::string mode_;
};

}  // namespace

TEST_CASE("specific intentions join category labels verbatim") {
  CHECK(Annotator::derive_specific_intention(
            item("g", "Mouse",
                 {"Video Games", "PC", "Accessories", "Gaming Mice"})) ==
        "Video Games, PC, Accessories, Gaming Mice.");
  CHECK(Annotator::derive_specific_intention(item("c", "Disc", {"CDs"})) ==
        "CDs.");
  CHECK_THROWS_AS(Annotator::derive_specific_intention(item("x", "Bare")),
                  SpecificIntentionUnavailableError);
}

TEST_CASE("implicit preference is the arrow-joined history") {
  auto annot = fallback_annotator();
  const auto text = annot.derive_implicit_preference(resident_evil_sequence(),
                                                     resident_evil_catalog());
  CHECK(text == std::string("1. ") + kRe2 + " → 2. " + kRe4);
}

TEST_CASE("a 20-item history renders with 19 arrows") {
  std::vector<catalog::ItemRecord> items;
  catalog::UserSequence seq{"u", {}};
  for (int i = 0; i < 20; ++i) {
    items.push_back(item("i" + std::to_string(i), "T" + std::to_string(i)));
    seq.events.push_back({"i" + std::to_string(i), i, {}});
  }
  auto annot = fallback_annotator();
  const auto text =
      annot.derive_implicit_preference(seq, make_catalog(items, {}));
  std::size_t arrows = 0;
  for (std::size_t pos = 0; (pos = text.find("→", pos)) != std::string::npos;
       pos += 3) {
    ++arrows;
  }
  CHECK(arrows == 19);
}

TEST_CASE("the fallback teacher writes deterministic preference text") {
  auto annot = fallback_annotator();
  const auto text = annot.generate_explicit_preference(resident_evil_sequence(),
                                                       resident_evil_catalog());
  CHECK(text == std::string("He prefers Games items such as ") + kRe2 +
                    " and " + kRe4 + ".");
  CHECK(annot.upstream_calls() == 0);
  // Pure: same inputs, same text.
  CHECK(annot.generate_explicit_preference(resident_evil_sequence(),
                                           resident_evil_catalog()) == text);
}

TEST_CASE("the fallback teacher recasts the review's first sentence") {
  auto annot = fallback_annotator();
  CHECK(annot.extract_vague_intention(
            "My son loves the graphics of the game. I'm happy I bought it.") ==
        "My son loves the graphics of the game.");
  CHECK(annot.extract_vague_intention("He loves his new controller") ==
        "I loves my new controller.");
  CHECK_THROWS_AS(annot.extract_vague_intention("   "), SlotUnavailableError);
}

TEST_CASE("the starred intention prompt is a distinct cache entry") {
  const auto prompts = PromptSet::builtin();
  CHECK(prompts.render_vague_intention_star("good game", "Game X") !=
        prompts.render_vague_intention("good game"));
  // Offline both variants reduce to the deterministic rewrite.
  auto annot = fallback_annotator();
  CHECK(annot.extract_vague_intention_star("He liked it a lot.", "Game X") ==
        annot.extract_vague_intention("He liked it a lot."));
}

TEST_CASE("recorded fixtures replay the published annotation examples") {
  const auto prompts = PromptSet::builtin();
  const std::string history = std::string("1. ") + kRe2 + " → 2. " + kRe4;
  const std::string review =
      "My son loves every minute of the game. I'm happy I bought this for him.";

  Annotator::Options options = fast_options();
  TeacherRequest pref_request{prompts.render_preference(history),
                              options.max_tokens, options.temperature};
  TeacherRequest intent_request{prompts.render_vague_intention(review),
                                options.max_tokens, options.temperature};
  TeacherFixture fixture{
      {teacher_request_digest(pref_request),
       "He prefers horror-based games with a strong narrative."},
      {teacher_request_digest(intent_request),
       "I enjoy buying games for my son that he enjoys."},
  };
  auto teacher = std::make_shared<FixtureTeacher>(fixture);
  Annotator annot(prompts, teacher, std::make_shared<AnnotationCache>(),
                  options);

  CHECK(annot.generate_explicit_preference(resident_evil_sequence(),
                                           resident_evil_catalog()) ==
        "He prefers horror-based games with a strong narrative.");
  CHECK(annot.extract_vague_intention(review) ==
        "I enjoy buying games for my son that he enjoys.");
  CHECK(teacher->calls() == 2);

  // Warm cache: the same asks trigger no further upstream calls.
  CHECK(annot.generate_explicit_preference(resident_evil_sequence(),
                                           resident_evil_catalog()) ==
        "He prefers horror-based games with a strong narrative.");
  CHECK(annot.extract_vague_intention(review) ==
        "I enjoy buying games for my son that he enjoys.");
  CHECK(teacher->calls() == 2);
  CHECK(annot.upstream_calls() == 2);
}

TEST_CASE("an empty completion is retried once, then the instance fails") {
  auto teacher = std::make_shared<FlakyTeacher>("empty");
  Annotator annot(PromptSet::builtin(), teacher,
                  std::make_shared<AnnotationCache>(), fast_options());
  CHECK_THROWS_AS(annot.extract_vague_intention("Some review."),
                  AnnotationError);
  CHECK(teacher->calls == 2);
}

TEST_CASE("transport failures retry up to max_attempts with backoff") {
  auto teacher = std::make_shared<FlakyTeacher>("transport");
  Annotator annot(PromptSet::builtin(), teacher,
                  std::make_shared<AnnotationCache>(), fast_options());
  CHECK_THROWS_AS(annot.extract_vague_intention("Some review."),
                  AnnotationError);
  CHECK(teacher->calls == 3);
}

TEST_CASE("the teacher wire contract round-trips through a real socket") {
  httplib::Server server;
  std::string seen_body;
  server.Post("/v1/complete", [&](const httplib::Request& req,
                                  httplib::Response& res) {
    seen_body = req.body;
    const auto j = json::parse(req.body);
    if (j.at("prompt").get<std::string>().find("outage") != std::string::npos) {
      res.status = 503;
      return;
    }
    if (j.at("prompt").get<std::string>().find("limit") != std::string::npos) {
      res.status = 429;
      res.set_header("Retry-After", "2.5");
      return;
    }
    res.set_content(json{{"text", "a completion"}}.dump(), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread serving([&] { server.listen_after_bind(); });

  HttpTeacher teacher("http://127.0.0.1:" + std::to_string(port));
  CHECK(teacher.complete({"say something", 64, 0.0}) == "a completion");
  const auto sent = json::parse(seen_body);
  CHECK(sent.at("prompt") == "say something");
  CHECK(sent.at("max_tokens") == 64);
  CHECK(sent.at("temperature") == 0.0);

  CHECK_THROWS_AS(teacher.complete({"an outage", 64, 0.0}), TransportError);
  try {
    teacher.complete({"rate limit", 64, 0.0});
    FAIL("expected TransportError");
  } catch (const TransportError& e) {
    REQUIRE(e.retry_after_seconds.has_value());
    CHECK(*e.retry_after_seconds == doctest::Approx(2.5));
  }

  server.stop();
  serving.join();
}

TEST_CASE("the annotation cache persists to disk and stays immutable") {
  const auto path = std::filesystem::temp_directory_path() /
                    "ricot_cache_test.jsonl";
  std::filesystem::remove(path);
  {
    AnnotationCache cache(path);
    cache.store("digest-a", "text a");
    CHECK(cache.lookup("digest-a") == "text a");
    CHECK_THROWS_AS(cache.store("digest-a", "conflicting"), DataError);
    cache.store("digest-a", "text a");  // identical restore is a no-op
  }
  AnnotationCache reloaded(path);
  CHECK(reloaded.size() == 1);
  CHECK(reloaded.lookup("digest-a") == "text a");
  std::filesystem::remove(path);
}

TEST_CASE("task reversal swaps the query and the answer") {
  const auto& registry = templates::TemplateRegistry::builtin();
  const auto& tmpl = registry.by_id("int-01");
  templates::SlotMap slots;
  slots[templates::SlotName::SpecificIntention] = templates::SlotValue{
      "Video Games, PC, Accessories.", templates::SlotSource::FromCategories};
  InstructionInstance instance;
  instance.rendered = templates::instantiate(
      tmpl, slots, templates::TargetItemTitle{"Laser Mouse 3000"});
  instance.user_id = "u";
  instance.scenario_id = "s";

  const auto reversed = apply_task_reversal(instance, registry);
  CHECK(reversed.rendered.template_id == "int-05");
  CHECK(reversed.rendered.instruction_text.find("Laser Mouse 3000") !=
        std::string::npos);
  CHECK(reversed.rendered.target_output == "Video Games, PC, Accessories.");

  // Reversing twice restores the original pairing: the instruction asks for
  // the item and the target is the item.
  const auto restored = apply_task_reversal(reversed, registry);
  CHECK(restored.rendered.template_id == "int-01");
  CHECK(restored.rendered.target_output == "Laser Mouse 3000");
  CHECK(restored.rendered.instruction_text.find(
            "Video Games, PC, Accessories.") != std::string::npos);
}

TEST_CASE("chain-of-thought instances are not reversible") {
  const auto& registry = templates::TemplateRegistry::builtin();
  auto annot = fallback_annotator();
  const auto cat = resident_evil_catalog();
  const auto instance = build_cot_instance(
      registry, resident_evil_sequence(), cat, "He prefers horror games",
      cat.item("re4"));
  CHECK_THROWS_AS(apply_task_reversal(instance, registry), NotReversibleError);
}

TEST_CASE("relatedness pairs swap conditioning between intention and history") {
  const auto& registry = templates::TemplateRegistry::builtin();
  const auto cat = resident_evil_catalog();
  catalog::UserSequence history{"u", {{"re2", 1, {}}}};
  const auto pair = build_relatedness_pair(
      registry, history, cat, "I want another scary game.", cat.item("re4"));
  REQUIRE(pair.size() == 2);
  CHECK(pair[0].rendered.template_id == "comb-07");
  CHECK(pair[0].rendered.target_output == std::string("1. ") + kRe2);
  CHECK(pair[1].rendered.template_id == "comb-08");
  CHECK(pair[1].rendered.target_output ==
        std::string("I want another scary game. ") + kRe4);
  for (const auto& inst : pair) {
    CHECK(registry.by_id(inst.rendered.template_id).strategy ==
          templates::StrategyTag::Relatedness);
  }

  CHECK(build_relatedness_pair(registry, history, cat, "  ", cat.item("re4"))
            .empty());
}

TEST_CASE("cot instances mention both the preference and the target title") {
  const auto& registry = templates::TemplateRegistry::builtin();
  const auto cat = resident_evil_catalog();
  const auto instance =
      build_cot_instance(registry, resident_evil_sequence(), cat,
                         "He prefers horror games.", cat.item("re4"));
  CHECK(instance.rendered.target_output.find("He prefers horror games") !=
        std::string::npos);
  CHECK(instance.rendered.target_output.find(kRe4) != std::string::npos);
  CHECK(registry.by_id(instance.rendered.template_id).strategy ==
        templates::StrategyTag::CoT);
}

TEST_CASE("corpus generation fills quotas and reports matching statistics") {
  const auto cat = uniform_users_catalog(30, 40, 6, 21);
  const auto sequences = catalog::build_sequences(cat, 20);
  const auto& registry = templates::TemplateRegistry::builtin();
  auto annot = fallback_annotator();

  GenerationConfig config;
  config.seed = 5;
  config.scenarios = {
      {"seq_rec", templates::AspectTags::parse("P1", "I0", "T3"),
       templates::StrategyTag::Plain, 10},
      {"pointwise", templates::AspectTags::parse("P1", "I0", "T0"),
       templates::StrategyTag::Plain, 10},
      {"vague_search", templates::AspectTags::parse("P0", "I1", "T2"),
       templates::StrategyTag::Plain, 10},
      {"specific_search", templates::AspectTags::parse("P0", "I2", "T2"),
       templates::StrategyTag::Plain, 10},
      {"cot", templates::AspectTags::parse("P1", "I0", "T2"),
       templates::StrategyTag::CoT, 10},
      {"reversal", templates::AspectTags::parse("P0", "I2", "T2"),
       templates::StrategyTag::TaskReversal, 10},
      {"relatedness", templates::AspectTags::parse("P0", "I1", "T2"),
       templates::StrategyTag::Relatedness, 10},
  };

  std::ostringstream out;
  const auto stats =
      generate_corpus(config, cat, sequences, registry, annot, out);
  CHECK(stats.total == 70);
  CHECK(stats.skipped == 0);
  CHECK(stats.preference_describing + stats.intention_describing == stats.total);
  CHECK(stats.preference_describing > 0);
  CHECK(stats.intention_describing > 0);

  // The emitted file agrees with the stats.
  std::istringstream in(out.str());
  std::size_t rows = 0;
  std::map<std::string, std::size_t> per_scenario;
  std::string line;
  while (std::getline(in, line)) {
    const auto j = json::parse(line);
    REQUIRE(!j.contains("__marker__"));
    const auto instance = instance_from_json(j);
    CHECK(instance.split == "train");
    CHECK(!instance.rendered.instruction_text.empty());
    CHECK(!instance.rendered.target_output.empty());
    ++per_scenario[instance.scenario_id];
    ++rows;
  }
  CHECK(rows == stats.total);
  for (const auto& [scenario, count] : stats.per_scenario) {
    CHECK(per_scenario[scenario] == count);
  }
}

TEST_CASE("corpus generation is deterministic for a fixed seed") {
  const auto cat = uniform_users_catalog(20, 30, 5, 33);
  const auto sequences = catalog::build_sequences(cat, 20);
  const auto& registry = templates::TemplateRegistry::builtin();

  GenerationConfig config;
  config.seed = 9;
  config.scenarios = {{"seq_rec", templates::AspectTags::parse("P1", "I0", "T3"),
                       templates::StrategyTag::Plain, 12}};

  std::ostringstream a, b;
  auto annot_a = fallback_annotator();
  auto annot_b = fallback_annotator();
  generate_corpus(config, cat, sequences, registry, annot_a, a);
  generate_corpus(config, cat, sequences, registry, annot_b, b);
  CHECK(a.str() == b.str());
  CHECK(!a.str().empty());
}

TEST_CASE("budget exhaustion truncates the corpus with a marker") {
  const auto cat = uniform_users_catalog(20, 30, 5, 33);
  const auto sequences = catalog::build_sequences(cat, 20);
  const auto& registry = templates::TemplateRegistry::builtin();

  // Fixture teacher with zero recorded entries would fail; instead allow a
  // tiny budget against an always-working teacher surrogate: the fallback is
  // teacher-free, so use a fixture covering nothing and max 0 calls.
  Annotator::Options options;
  options.backoff_base = std::chrono::milliseconds(0);
  options.max_upstream_calls = 0;
  auto teacher = std::make_shared<FixtureTeacher>(TeacherFixture{});
  Annotator annot(PromptSet::builtin(), teacher,
                  std::make_shared<AnnotationCache>(), options);

  GenerationConfig config;
  config.seed = 9;
  config.scenarios = {{"explicit_search",
                       templates::AspectTags::parse("P2", "I0", "T3"),
                       templates::StrategyTag::Plain, 5}};
  std::ostringstream out;
  const auto stats =
      generate_corpus(config, cat, sequences, registry, annot, out);
  CHECK(stats.partial);
  CHECK(out.str().find("\"__marker__\":\"partial_result\"") != std::string::npos);
}

TEST_CASE("audit sheets sample per kind, deterministically, with verdicts") {
  const auto cat = uniform_users_catalog(40, 50, 6, 4);
  const auto sequences = catalog::build_sequences(cat, 20);
  const auto& registry = templates::TemplateRegistry::builtin();
  auto annot = fallback_annotator();

  GenerationConfig config;
  config.seed = 13;
  config.scenarios = {
      {"seq_rec", templates::AspectTags::parse("P1", "I0", "T3"),
       templates::StrategyTag::Plain, 30},
      {"specific_search", templates::AspectTags::parse("P0", "I2", "T2"),
       templates::StrategyTag::Plain, 30},
  };
  std::ostringstream corpus;
  generate_corpus(config, cat, sequences, registry, annot, corpus);

  std::istringstream corpus_in(corpus.str());
  std::ostringstream sheet;
  const auto stats = audit_sample(corpus_in, 10, 77, sheet);
  CHECK(stats.preference_rows == 10);
  CHECK(stats.intention_rows == 10);
  CHECK(!stats.short_of_quota);

  std::istringstream again_in(corpus.str());
  std::ostringstream sheet_again;
  audit_sample(again_in, 10, 77, sheet_again);
  CHECK(sheet.str() == sheet_again.str());

  // Answer everything "yes" and aggregate to 100%.
  std::istringstream sheet_in(sheet.str());
  std::ostringstream answered;
  std::string line;
  while (std::getline(sheet_in, line)) {
    auto j = json::parse(line);
    for (auto& q : j["questions"]) q["verdict"] = "yes";
    answered << j.dump() << "\n";
  }
  std::istringstream answered_in(answered.str());
  const auto agg = aggregate_audit(answered_in);
  for (const auto& [kind, per_question] : agg.counts) {
    for (const auto& [yes, total] : per_question) {
      CHECK(yes == total);
      CHECK(total == 10);
    }
  }

  // Asking for more than exists samples everything and warns.
  std::istringstream small_in(corpus.str());
  std::ostringstream small_sheet;
  const auto small = audit_sample(small_in, 1000, 77, small_sheet);
  CHECK(small.short_of_quota);
  CHECK(small.preference_rows + small.intention_rows == 60);
}

TEST_CASE("warm_cache fills the cache once; reruns stay local") {
  const auto cat = uniform_users_catalog(12, 25, 5, 19);
  const auto sequences = catalog::build_sequences(cat, 20);
  const auto& registry = templates::TemplateRegistry::builtin();

  // Record fallback texts as fixture completions so a FixtureTeacher can
  // serve them while counting upstream traffic.
  const auto prompts = PromptSet::builtin();
  Annotator::Options options;
  options.backoff_base = std::chrono::milliseconds(0);
  TeacherFixture fixture;
  {
    Annotator offline(prompts, nullptr, std::make_shared<AnnotationCache>());
    for (const auto& seq : sequences) {
      for (std::size_t cut = 1; cut < seq.events.size(); ++cut) {
        catalog::UserSequence prefix{seq.user_id,
                                     {seq.events.begin(), seq.events.begin() + cut}};
        TeacherRequest request{
            prompts.render_preference(offline.derive_implicit_preference(prefix, cat)),
            options.max_tokens, options.temperature};
        fixture[teacher_request_digest(request)] =
            offline.generate_explicit_preference(prefix, cat);
      }
      for (const auto& event : seq.events) {
        if (!event.review_text) continue;
        TeacherRequest request{prompts.render_vague_intention(*event.review_text),
                               options.max_tokens, options.temperature};
        fixture[teacher_request_digest(request)] =
            offline.extract_vague_intention(*event.review_text);
      }
    }
  }

  GenerationConfig config;
  config.seed = 3;
  config.scenarios = {
      {"vague_personalized", templates::AspectTags::parse("P1", "I1", "T3"),
       templates::StrategyTag::Plain, 8},
  };

  auto teacher = std::make_shared<FixtureTeacher>(fixture);
  auto cache = std::make_shared<AnnotationCache>();
  {
    Annotator annot(prompts, teacher, cache, options);
    const auto stats =
        warm_cache(config, cat, sequences, registry, annot, 4);
    CHECK(stats.tasks > 0);
    CHECK(stats.failures == 0);
    CHECK(stats.upstream_calls > 0);
    CHECK(teacher->calls() == stats.upstream_calls);
  }
  const auto calls_after_first = teacher->calls();
  {
    Annotator annot(prompts, teacher, cache, options);
    const auto stats =
        warm_cache(config, cat, sequences, registry, annot, 4);
    CHECK(stats.upstream_calls == 0);
  }
  CHECK(teacher->calls() == calls_after_first);

  // Worker count changes scheduling, never the work: a single-threaded warm
  // over a fresh cache issues exactly the same number of upstream calls.
  {
    auto solo_teacher = std::make_shared<FixtureTeacher>(fixture);
    auto solo_cache = std::make_shared<AnnotationCache>();
    Annotator annot(prompts, solo_teacher, solo_cache, options);
    const auto stats =
        warm_cache(config, cat, sequences, registry, annot, 1);
    CHECK(stats.upstream_calls == calls_after_first);
    CHECK(solo_cache->size() == cache->size());
  }
}
