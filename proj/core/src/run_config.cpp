// Copyright (c) 2026 the ricot authors
// SPDX-License-Identifier: Apache-2.0

#include "ricot/run_config.hpp"

#include <cstdlib>
#include <filesystem>
#include <map>
#include <mutex>

#include "ricot/jsonl.hpp"

namespace ricot {

namespace {

const json* find(const json& j, const std::string& key) {
  if (!j.is_object()) return nullptr;
  const auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

std::string want_string(const json& j, const std::string& path,
                        const std::string& fallback = {}) {
  const auto* v = find(j, path.substr(path.rfind('.') + 1));
  if (!v) return fallback;
  if (!v->is_string()) throw ConfigError(path + ": expected a string");
  return v->get<std::string>();
}

template <typename T>
T want_number(const json& j, const std::string& path, T fallback) {
  const auto* v = find(j, path.substr(path.rfind('.') + 1));
  if (!v) return fallback;
  if (!v->is_number()) throw ConfigError(path + ": expected a number");
  return v->get<T>();
}

bool want_bool(const json& j, const std::string& path, bool fallback) {
  const auto* v = find(j, path.substr(path.rfind('.') + 1));
  if (!v) return fallback;
  if (!v->is_boolean()) throw ConfigError(path + ": expected a boolean");
  return v->get<bool>();
}

std::string env_or_empty(const char* name) {
  const char* value = std::getenv(name);
  return value ? value : "";
}

}  // namespace

std::vector<annotator::ScenarioSpec> default_scenarios(std::size_t quota) {
  using templates::AspectTags;
  using templates::StrategyTag;
  const auto spec = [&](const char* id, const char* p, const char* i,
                        const char* t,
                        StrategyTag strategy = StrategyTag::Plain) {
    return annotator::ScenarioSpec{id, AspectTags::parse(p, i, t), strategy,
                                   quota};
  };
  return {
      spec("seq_rec", "P1", "I0", "T3"),
      spec("pointwise", "P1", "I0", "T0"),
      spec("explicit_search", "P2", "I0", "T3"),
      spec("vague_search", "P0", "I1", "T2"),
      spec("specific_search", "P0", "I2", "T2"),
      spec("vague_personalized", "P1", "I1", "T3"),
      spec("specific_personalized", "P1", "I2", "T3"),
  };
}

RunConfig RunConfig::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  RunConfig config;

  if (const auto* d = find(j, "dataset")) {
    config.dataset.name = want_string(*d, "dataset.name");
    config.dataset.interactions_path = want_string(*d, "dataset.interactions");
    config.dataset.items_path = want_string(*d, "dataset.items");
  }
  config.output_dir = want_string(j, "output_dir", config.output_dir);
  config.kcore_k = want_number<int>(j, "kcore_k", config.kcore_k);
  if (config.kcore_k < 1) throw ConfigError("kcore_k: must be >= 1");
  config.max_sequence_len =
      want_number<std::size_t>(j, "max_sequence_len", config.max_sequence_len);
  if (config.max_sequence_len == 0) {
    throw ConfigError("max_sequence_len: must be >= 1");
  }

  if (const auto* s = find(j, "seeds")) {
    config.seeds.pipeline =
        want_number<std::uint64_t>(*s, "seeds.pipeline", config.seeds.pipeline);
    config.seeds.corpus =
        want_number<std::uint64_t>(*s, "seeds.corpus", config.seeds.corpus);
    config.seeds.eval =
        want_number<std::uint64_t>(*s, "seeds.eval", config.seeds.eval);
    config.seeds.search_split = want_number<std::uint64_t>(
        *s, "seeds.search_split", config.seeds.search_split);
  }

  if (const auto* t = find(j, "teacher")) {
    config.teacher.backend =
        want_string(*t, "teacher.backend", config.teacher.backend);
    config.teacher.max_tokens =
        want_number<int>(*t, "teacher.max_tokens", config.teacher.max_tokens);
    config.teacher.temperature = want_number<double>(*t, "teacher.temperature",
                                                     config.teacher.temperature);
    config.teacher.max_upstream_calls = want_number<std::uint64_t>(
        *t, "teacher.max_upstream_calls", config.teacher.max_upstream_calls);
    config.teacher.concurrency = want_number<std::size_t>(
        *t, "teacher.concurrency", config.teacher.concurrency);
    config.teacher.cache_path =
        want_string(*t, "teacher.cache", config.teacher.cache_path);
    config.teacher.prompts_path =
        want_string(*t, "teacher.prompts", config.teacher.prompts_path);
    config.teacher.max_attempts = want_number<int>(*t, "teacher.max_attempts",
                                                   config.teacher.max_attempts);
    config.teacher.backoff_base_ms = want_number<std::int64_t>(
        *t, "teacher.backoff_base_ms", config.teacher.backoff_base_ms);
  }

  if (const auto* s = find(j, "scorer")) {
    config.scorer_cfg.backend =
        want_string(*s, "scorer.backend", config.scorer_cfg.backend);
    config.scorer_cfg.per_token_mean = want_bool(
        *s, "scorer.per_token_mean", config.scorer_cfg.per_token_mean);
    config.scorer_cfg.identity_label =
        want_string(*s, "scorer.identity_label", config.scorer_cfg.identity_label);
  }

  if (const auto* p = find(j, "pool")) {
    config.pool.kind = want_string(*p, "pool.kind", config.pool.kind);
    matcher::parse_pool_kind(config.pool.kind);  // validate early
    config.pool.n = want_number<std::size_t>(*p, "pool.n", config.pool.n);
    config.pool.alpha = want_number<double>(*p, "pool.alpha", config.pool.alpha);
    if (config.pool.alpha < 0.0 || config.pool.alpha > 1.0) {
      throw ConfigError("pool.alpha: must lie in [0,1]");
    }
    config.pool.window =
        want_number<std::size_t>(*p, "pool.window", config.pool.window);
  }

  if (const auto* scenarios = find(j, "scenarios")) {
    if (!scenarios->is_array()) {
      throw ConfigError("scenarios: expected an array");
    }
    std::size_t idx = 0;
    for (const auto& s : *scenarios) {
      const std::string path = "scenarios[" + std::to_string(idx++) + "]";
      if (!s.is_object()) throw ConfigError(path + ": expected an object");
      annotator::ScenarioSpec spec;
      spec.id = want_string(s, path + ".id");
      if (spec.id.empty()) throw ConfigError(path + ".id: required");
      try {
        spec.aspects = templates::AspectTags::parse(
            want_string(s, path + ".p"), want_string(s, path + ".i"),
            want_string(s, path + ".t"));
      } catch (const ConfigError& e) {
        throw ConfigError(path + "." + e.what());
      }
      spec.quota = want_number<std::size_t>(s, path + ".quota", 0);
      const std::string strategy = want_string(s, path + ".strategy", "plain");
      spec.strategy = templates::parse_strategy(strategy);
      config.scenarios.push_back(std::move(spec));
    }
  } else {
    config.scenarios = default_scenarios(50);
  }

  if (const auto* e = find(j, "eval")) {
    config.eval_cfg.skip_threshold = want_number<double>(
        *e, "eval.skip_threshold", config.eval_cfg.skip_threshold);
    config.eval_cfg.scenario_id =
        want_string(*e, "eval.scenario", config.eval_cfg.scenario_id);
    config.eval_cfg.template_id =
        want_string(*e, "eval.template_id", config.eval_cfg.template_id);
  }

  if (const auto* t = find(j, "templates")) {
    config.templates_files.data_path = want_string(*t, "templates.data");
    config.templates_files.manifest_path = want_string(*t, "templates.manifest");
    if (config.templates_files.data_path.empty() !=
        config.templates_files.manifest_path.empty()) {
      throw ConfigError("templates: data and manifest must be given together");
    }
  }
  return config;
}

RunConfig RunConfig::load_file(const std::string& path) {
  return from_json(read_json_file(path));
}

void RunConfig::validate_paths() const {
  const auto check = [](const std::string& path, const std::string& field) {
    if (path.empty()) return;
    if (!std::filesystem::exists(path)) {
      throw ConfigError(field + ": path does not exist: " + path);
    }
  };
  check(dataset.interactions_path, "dataset.interactions");
  check(dataset.items_path, "dataset.items");
  check(teacher.prompts_path, "teacher.prompts");
  check(templates_files.data_path, "templates.data");
  check(templates_files.manifest_path, "templates.manifest");
  if (teacher.backend.rfind("fixture:", 0) == 0) {
    check(teacher.backend.substr(8), "teacher.backend");
  }
  if (scorer_cfg.backend.rfind("fixture:", 0) == 0) {
    check(scorer_cfg.backend.substr(8), "scorer.backend");
  }
}

std::shared_ptr<annotator::TeacherClient> make_teacher(
    const RunConfig::Teacher& cfg) {
  if (cfg.backend == "fallback") return nullptr;
  if (cfg.backend.rfind("fixture:", 0) == 0) {
    return annotator::FixtureTeacher::from_file(cfg.backend.substr(8));
  }
  if (cfg.backend.rfind("http://", 0) == 0 ||
      cfg.backend.rfind("https://", 0) == 0) {
    annotator::HttpTeacherOptions options;
    options.bearer_token = env_or_empty("RICOT_TEACHER_API_KEY");
    return std::make_shared<annotator::HttpTeacher>(cfg.backend, options);
  }
  throw ConfigError("teacher.backend: unknown value \"" + cfg.backend + "\"");
}

std::shared_ptr<scorer::Scorer> make_scorer(const RunConfig::ScorerCfg& cfg) {
  const auto& backend = cfg.backend;
  if (backend == "lexical") return std::make_shared<scorer::LexicalScorer>();
  if (backend == "mock-oracle") return std::make_shared<scorer::OracleScorer>(false);
  if (backend == "mock-inverse") return std::make_shared<scorer::OracleScorer>(true);
  if (backend.rfind("mock-random:", 0) == 0) {
    try {
      return std::make_shared<scorer::RandomScorer>(
          std::stoull(backend.substr(12)));
    } catch (const std::exception&) {
      throw ConfigError("scorer.backend: mock-random needs an integer seed");
    }
  }
  if (backend.rfind("fixture:", 0) == 0) {
    return std::make_shared<scorer::FixtureScorer>(
        scorer::FixtureScorer::from_file(backend.substr(8)));
  }
  if (backend.rfind("http://", 0) == 0 || backend.rfind("https://", 0) == 0) {
    scorer::HttpScorerOptions options;
    options.bearer_token = env_or_empty("RICOT_SCORER_API_KEY");
    options.identity_label = cfg.identity_label;
    return std::make_shared<scorer::HttpScorer>(backend, options);
  }
  throw ConfigError("scorer.backend: unknown value \"" + backend + "\"");
}

annotator::Annotator make_annotator(const RunConfig& config) {
  annotator::PromptSet prompts =
      config.teacher.prompts_path.empty()
          ? annotator::PromptSet::builtin()
          : annotator::PromptSet::load_file(config.teacher.prompts_path);
  auto teacher = make_teacher(config.teacher);
  auto cache = config.teacher.cache_path.empty()
                   ? std::make_shared<annotator::AnnotationCache>()
                   : std::make_shared<annotator::AnnotationCache>(
                         std::filesystem::path(config.teacher.cache_path));
  annotator::Annotator::Options options;
  options.max_attempts = config.teacher.max_attempts;
  options.backoff_base = std::chrono::milliseconds(config.teacher.backoff_base_ms);
  options.max_tokens = config.teacher.max_tokens;
  options.temperature = config.teacher.temperature;
  options.max_upstream_calls = config.teacher.max_upstream_calls;
  return annotator::Annotator(std::move(prompts), std::move(teacher),
                              std::move(cache), options);
}

const templates::TemplateRegistry& registry_for(const RunConfig& config) {
  if (config.templates_files.data_path.empty()) {
    return templates::TemplateRegistry::builtin();
  }
  static std::mutex mutex;
  static std::map<std::string, templates::TemplateRegistry> loaded;
  std::lock_guard lock(mutex);
  const std::string key = config.templates_files.data_path + "|" +
                          config.templates_files.manifest_path;
  const auto it = loaded.find(key);
  if (it != loaded.end()) return it->second;
  return loaded
      .emplace(key, templates::TemplateRegistry::load_files(
                        config.templates_files.data_path,
                        config.templates_files.manifest_path))
      .first->second;
}

}  // namespace ricot
