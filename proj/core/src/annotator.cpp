// Copyright (c) 2026 the ricot authors
// SPDX-License-Identifier: Apache-2.0

#include "ricot/annotator.hpp"

#include <httplib.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include "embedded_data.hpp"
#include "ricot/digest.hpp"
#include "ricot/text.hpp"

namespace ricot::annotator {

// ---------------------------------------------------------------------------
// Teacher backends
// ---------------------------------------------------------------------------

std::string teacher_request_digest(const TeacherRequest& request) {
  const json j{{"prompt", request.prompt},
               {"max_tokens", request.max_tokens},
               {"temperature", request.temperature}};
  return sha256_hex(j.dump());
}

TeacherFixture load_teacher_fixture(std::istream& in) {
  TeacherFixture fixture;
  for_each_jsonl(in, [&](json j, std::size_t line_no) {
    if (!j.is_object() || !j.contains("digest") || !j.contains("text")) {
      throw DataError("teacher fixture line " + std::to_string(line_no) +
                      ": expected {digest, text}");
    }
    fixture[j["digest"].get<std::string>()] = j["text"].get<std::string>();
  });
  return fixture;
}

void append_teacher_fixture_entry(std::ostream& out, const std::string& digest,
                                  const std::string& text) {
  write_jsonl(out, json{{"digest", digest}, {"text", text}});
}

std::shared_ptr<FixtureTeacher> FixtureTeacher::from_file(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open teacher fixture " + path);
  return std::make_shared<FixtureTeacher>(load_teacher_fixture(in));
}

std::string FixtureTeacher::complete(const TeacherRequest& request) {
  calls_.fetch_add(1);
  const auto it = entries_.find(teacher_request_digest(request));
  if (it == entries_.end()) {
    throw ProtocolError("teacher fixture: no recorded completion",
                        teacher_request_digest(request));
  }
  return it->second;
}

HttpTeacher::HttpTeacher(std::string base_url, HttpTeacherOptions options)
    : base_url_(std::move(base_url)), options_(std::move(options)) {}

std::string HttpTeacher::complete(const TeacherRequest& request) {
  httplib::Client client(base_url_);
  client.set_connection_timeout(options_.timeout.count(), 0);
  client.set_read_timeout(options_.timeout.count(), 0);
  httplib::Headers headers;
  if (!options_.bearer_token.empty()) {
    headers.emplace("Authorization", "Bearer " + options_.bearer_token);
  }
  const json payload{{"prompt", request.prompt},
                     {"max_tokens", request.max_tokens},
                     {"temperature", request.temperature}};
  auto res = client.Post("/v1/complete", headers, payload.dump(),
                         "application/json");
  if (!res) {
    throw TransportError("teacher transport failure: " +
                         httplib::to_string(res.error()));
  }
  if (res->status == 429) {
    std::optional<double> hint;
    if (res->has_header("Retry-After")) {
      try {
        hint = std::stod(res->get_header_value("Retry-After"));
      } catch (...) {
      }
    }
    throw TransportError("teacher rate limited", hint);
  }
  if (res->status >= 500) {
    throw TransportError("teacher status " + std::to_string(res->status));
  }
  if (res->status != 200) {
    throw ProtocolError("teacher status " + std::to_string(res->status),
                        res->body.substr(0, 200));
  }
  json j = json::parse(res->body, nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("text") ||
      !j["text"].is_string()) {
    throw ProtocolError("teacher response is not {\"text\": str}",
                        res->body.substr(0, 200));
  }
  return j["text"].get<std::string>();
}

// ---------------------------------------------------------------------------
// Prompts
// ---------------------------------------------------------------------------

namespace {

std::string fill_one(std::string text, const std::string& key,
                     const std::string& value) {
  const std::string needle = "{" + key + "}";
  const auto pos = text.find(needle);
  if (pos == std::string::npos) {
    throw ConfigError("prompt is missing the {" + key + "} placeholder");
  }
  text.replace(pos, needle.size(), value);
  return text;
}

PromptSet parse_prompts(const json& j) {
  if (!j.is_object()) throw ConfigError("prompts: not a JSON object");
  PromptSet p;
  p.version = j.value("prompt_version", 1);
  p.preference = j.at("preference").get<std::string>();
  p.vague_intention = j.at("vague_intention").get<std::string>();
  p.vague_intention_star = j.value("vague_intention_star", p.vague_intention);
  return p;
}

}  // namespace

PromptSet PromptSet::builtin() {
  const json j = json::parse(detail::embedded_prompts_json());
  return parse_prompts(j);
}

PromptSet PromptSet::load_file(const std::string& path) {
  return parse_prompts(read_json_file(path));
}

std::string PromptSet::render_preference(const std::string& history_text) const {
  return fill_one(preference, "history", history_text);
}

std::string PromptSet::render_vague_intention(const std::string& review) const {
  return fill_one(vague_intention, "review", review);
}

std::string PromptSet::render_vague_intention_star(const std::string& review,
                                                   const std::string& title) const {
  return fill_one(fill_one(vague_intention_star, "review", review), "title",
                  title);
}

// ---------------------------------------------------------------------------
// Cache
// ---------------------------------------------------------------------------

AnnotationCache::AnnotationCache(std::optional<std::filesystem::path> path)
    : path_(std::move(path)) {
  if (!path_ || !std::filesystem::exists(*path_)) return;
  std::ifstream in(*path_);
  for_each_jsonl(in, [&](json j, std::size_t line_no) {
    if (!j.is_object() || !j.contains("digest") || !j.contains("text")) {
      throw DataError("annotation cache line " + std::to_string(line_no) +
                      ": expected {digest, text}");
    }
    entries_.emplace(j["digest"].get<std::string>(),
                     j["text"].get<std::string>());
  });
}

std::optional<std::string> AnnotationCache::lookup(
    const std::string& digest) const {
  std::lock_guard lock(mutex_);
  const auto it = entries_.find(digest);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void AnnotationCache::store(const std::string& digest, const std::string& text) {
  std::lock_guard lock(mutex_);
  const auto [it, inserted] = entries_.emplace(digest, text);
  if (!inserted) {
    if (it->second != text) {
      throw DataError("annotation cache: conflicting entry for " + digest);
    }
    return;
  }
  if (path_) {
    std::ofstream out(*path_, std::ios::app);
    if (!out) throw DataError("cannot append to cache " + path_->string());
    write_jsonl(out, json{{"digest", digest}, {"text", text}});
  }
}

std::size_t AnnotationCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

// ---------------------------------------------------------------------------
// Annotator
// ---------------------------------------------------------------------------

Annotator::Annotator(PromptSet prompts, std::shared_ptr<TeacherClient> teacher,
                     std::shared_ptr<AnnotationCache> cache, Options options)
    : prompts_(std::move(prompts)),
      teacher_(std::move(teacher)),
      cache_(std::move(cache)),
      options_(options) {
  if (!cache_) cache_ = std::make_shared<AnnotationCache>();
}

std::uint64_t Annotator::upstream_calls() const {
  std::lock_guard lock(mutex_);
  return upstream_calls_;
}

std::string Annotator::teach(const std::string& prompt) {
  TeacherRequest request{prompt, options_.max_tokens, options_.temperature};
  const std::string digest = teacher_request_digest(request);
  if (auto hit = cache_->lookup(digest)) return *hit;

  int transport_failures = 0;
  int empty_completions = 0;
  std::string last_error;
  for (;;) {
    {
      std::lock_guard lock(mutex_);
      if (upstream_calls_ >= options_.max_upstream_calls) {
        throw BudgetExhaustedError("teacher budget exhausted after " +
                                   std::to_string(upstream_calls_) + " calls");
      }
      ++upstream_calls_;
    }
    std::string text;
    try {
      text = teacher_->complete(request);
    } catch (const TransportError& e) {
      last_error = e.what();
      if (++transport_failures >= options_.max_attempts) {
        throw AnnotationError("teacher failed after " +
                              std::to_string(transport_failures) +
                              " attempts: " + last_error);
      }
      auto delay = options_.backoff_base * (1 << (transport_failures - 1));
      if (e.retry_after_seconds) {
        const auto hint = std::chrono::milliseconds(
            static_cast<long long>(*e.retry_after_seconds * 1000.0));
        delay = std::max(delay, hint);
      }
      if (delay.count() > 0) std::this_thread::sleep_for(delay);
      continue;
    } catch (const ProtocolError& e) {
      throw AnnotationError(std::string("teacher protocol error: ") + e.what());
    }
    if (trim(text).empty()) {
      if (++empty_completions >= 2) {
        throw AnnotationError("teacher returned an empty completion twice");
      }
      continue;
    }
    cache_->store(digest, text);
    return text;
  }
}

std::string Annotator::derive_implicit_preference(
    const catalog::UserSequence& sequence, const catalog::Catalog& cat) const {
  return templates::render_history(sequence, cat);
}

namespace {

/// "He prefers <leaf> items such as <up to two most recent titles>."
std::string fallback_preference(const catalog::UserSequence& sequence,
                                const catalog::Catalog& cat) {
  std::map<std::string, std::size_t> leaf_counts;
  for (const auto& event : sequence.events) {
    const auto& cats = cat.item(event.item_id).categories;
    if (!cats.empty()) ++leaf_counts[cats.back()];
  }
  std::string leaf = "similar";
  std::size_t best = 0;
  for (const auto& [label, count] : leaf_counts) {
    if (count > best) {  // map order breaks ties lexicographically
      best = count;
      leaf = label;
    }
  }
  const auto& events = sequence.events;
  const std::string last = collapse_whitespace(cat.item(events.back().item_id).title);
  std::string examples = last;
  if (events.size() >= 2) {
    const std::string prev =
        collapse_whitespace(cat.item(events[events.size() - 2].item_id).title);
    examples = prev + " and " + last;
  }
  return "He prefers " + leaf + " items such as " + examples + ".";
}

const std::map<std::string, std::string>& pronoun_rewrites() {
  static const std::map<std::string, std::string> table{
      {"he", "I"},       {"she", "I"},      {"they", "I"},
      {"him", "me"},     {"his", "my"},     {"her", "my"},
      {"hers", "mine"},  {"them", "me"},    {"their", "my"},
      {"himself", "myself"}, {"herself", "myself"},
  };
  return table;
}

/// First sentence of the review, pronouns moved to first person via the
/// fixed table above.
std::string fallback_intention(const std::string& review) {
  const std::string sentence = first_sentence(collapse_whitespace(review));
  std::ostringstream out;
  std::istringstream in(sentence);
  std::string token;
  bool first = true;
  while (in >> token) {
    std::size_t b = 0;
    std::size_t e = token.size();
    while (b < e && !std::isalnum(static_cast<unsigned char>(token[b]))) ++b;
    while (e > b && !std::isalnum(static_cast<unsigned char>(token[e - 1]))) --e;
    const std::string core = token.substr(b, e - b);
    const auto it = pronoun_rewrites().find(to_lower_ascii(core));
    std::string rewritten = token;
    if (it != pronoun_rewrites().end()) {
      rewritten = token.substr(0, b) + it->second + token.substr(e);
    }
    if (!first) out << ' ';
    out << rewritten;
    first = false;
  }
  std::string text = out.str();
  if (!text.empty() && text.back() != '.' && text.back() != '!' &&
      text.back() != '?') {
    text.push_back('.');
  }
  return text;
}

}  // namespace

std::string Annotator::generate_explicit_preference(
    const catalog::UserSequence& sequence, const catalog::Catalog& cat) {
  if (sequence.events.empty()) {
    throw SlotUnavailableError("explicit preference: empty history");
  }
  if (!teacher_) return fallback_preference(sequence, cat);
  const std::string history = templates::render_history(sequence, cat);
  return teach(prompts_.render_preference(history));
}

std::string Annotator::extract_vague_intention(const std::string& review_text) {
  if (trim(review_text).empty()) {
    throw SlotUnavailableError("vague intention: empty review");
  }
  if (!teacher_) return fallback_intention(review_text);
  return teach(prompts_.render_vague_intention(collapse_whitespace(review_text)));
}

std::string Annotator::extract_vague_intention_star(
    const std::string& review_text, const std::string& item_title) {
  if (trim(review_text).empty()) {
    throw SlotUnavailableError("vague intention*: empty review");
  }
  if (!teacher_) return fallback_intention(review_text);
  return teach(prompts_.render_vague_intention_star(
      collapse_whitespace(review_text), collapse_whitespace(item_title)));
}

std::string Annotator::derive_specific_intention(
    const catalog::ItemRecord& item) {
  if (item.categories.empty()) {
    throw SpecificIntentionUnavailableError(
        "specific intention: item \"" + item.item_id + "\" has no categories");
  }
  std::string out;
  for (std::size_t i = 0; i < item.categories.size(); ++i) {
    if (i > 0) out += ", ";
    out += item.categories[i];
  }
  out += ".";
  return out;
}

}  // namespace ricot::annotator
