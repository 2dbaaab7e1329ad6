// Copyright (c) 2026 the ricot authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ricot/catalog.hpp"
#include "ricot/errors.hpp"
#include "ricot/jsonl.hpp"
#include "ricot/templates.hpp"

namespace ricot::annotator {

// ---------------------------------------------------------------------------
// Teacher backends
// ---------------------------------------------------------------------------

/// Wire contract of a completion request:
/// {"prompt": str, "max_tokens": int, "temperature": number}.
struct TeacherRequest {
  std::string prompt;
  int max_tokens = 150;
  double temperature = 0.0;
};

/// Implementations are expected to be deterministic at temperature 0;
/// backends that cannot promise that should say so in their identity().
class TeacherClient {
 public:
  virtual ~TeacherClient() = default;
  virtual std::string complete(const TeacherRequest& request) = 0;
  virtual std::string identity() const = 0;
};

std::string teacher_request_digest(const TeacherRequest& request);

using TeacherFixture = std::unordered_map<std::string, std::string>;
TeacherFixture load_teacher_fixture(std::istream& in);
void append_teacher_fixture_entry(std::ostream& out, const std::string& digest,
                                  const std::string& text);

/// Replays recorded completions keyed by request digest and counts how often
/// it is asked. A miss is a (non-retriable) protocol error.
class FixtureTeacher final : public TeacherClient {
 public:
  explicit FixtureTeacher(TeacherFixture entries)
      : entries_(std::move(entries)) {}
  static std::shared_ptr<FixtureTeacher> from_file(const std::string& path);

  std::string complete(const TeacherRequest& request) override;
  std::string identity() const override { return "fixture"; }

  std::uint64_t calls() const { return calls_.load(); }

 private:
  TeacherFixture entries_;
  std::atomic<std::uint64_t> calls_{0};
};

struct HttpTeacherOptions {
  std::chrono::seconds timeout{60};
  std::string bearer_token;
};

/// POST {base_url}/v1/complete with the wire contract above; the response is
/// {"text": str}.
class HttpTeacher final : public TeacherClient {
 public:
  explicit HttpTeacher(std::string base_url, HttpTeacherOptions options = {});
  std::string complete(const TeacherRequest& request) override;
  std::string identity() const override { return base_url_; }

 private:
  std::string base_url_;
  HttpTeacherOptions options_;
};

// ---------------------------------------------------------------------------
// Prompts and cache
// ---------------------------------------------------------------------------

/// The fixed, versioned prompt texts used for teacher annotation. The
/// vague_intention_star slot is a second intention prompt kept for operators
/// who want an item-and-user phrasing; edit the data file to change it.
struct PromptSet {
  int version = 1;
  std::string preference;
  std::string vague_intention;
  std::string vague_intention_star;

  static PromptSet builtin();
  static PromptSet load_file(const std::string& path);

  std::string render_preference(const std::string& history_text) const;
  std::string render_vague_intention(const std::string& review) const;
  std::string render_vague_intention_star(const std::string& review,
                                          const std::string& title) const;
};

/// Digest-keyed completion cache, persisted as line-delimited JSON. A hit
/// never triggers an upstream call; entries are immutable once written.
class AnnotationCache {
 public:
  /// In-memory only when no path is given.
  explicit AnnotationCache(std::optional<std::filesystem::path> path = {});

  std::optional<std::string> lookup(const std::string& digest) const;
  void store(const std::string& digest, const std::string& text);
  std::size_t size() const;

 private:
  std::optional<std::filesystem::path> path_;
  mutable std::mutex mutex_;
  std::unordered_map<std::string, std::string> entries_;
};

// ---------------------------------------------------------------------------
// Annotator
// ---------------------------------------------------------------------------

class AnnotationError : public Error {
 public:
  using Error::Error;
};
class BudgetExhaustedError : public AnnotationError {
 public:
  using AnnotationError::AnnotationError;
};
/// A slot ingredient is missing for this instance (no review, no history...).
class SlotUnavailableError : public Error {
 public:
  using Error::Error;
};
class SpecificIntentionUnavailableError : public SlotUnavailableError {
 public:
  using SlotUnavailableError::SlotUnavailableError;
};

/// Produces fine-grained slot contents. With a teacher it prompts (through
/// the cache, with retries); without one it falls back to deterministic
/// offline annotations so the whole pipeline runs with no network:
///   preference: "He prefers <most frequent leaf category> items such as
///                <two most recent titles>."
///   vague intention: first sentence of the review, re-cast to first person
///                    by a fixed pronoun rewrite table.
class Annotator {
 public:
  struct Options {
    int max_attempts = 3;
    std::chrono::milliseconds backoff_base{1000};
    int max_tokens = 150;
    double temperature = 0.0;
    std::uint64_t max_upstream_calls = UINT64_MAX;
  };

  /// teacher == nullptr selects the deterministic fallback.
  Annotator(PromptSet prompts, std::shared_ptr<TeacherClient> teacher,
            std::shared_ptr<AnnotationCache> cache, Options options);
  Annotator(PromptSet prompts, std::shared_ptr<TeacherClient> teacher,
            std::shared_ptr<AnnotationCache> cache)
      : Annotator(std::move(prompts), std::move(teacher), std::move(cache),
                  Options{}) {}

  /// Arrow-rendered history; the P1 slot.
  std::string derive_implicit_preference(const catalog::UserSequence& sequence,
                                         const catalog::Catalog& cat) const;

  /// Teacher-phrased (or fallback) preference text; the P2 slot.
  std::string generate_explicit_preference(const catalog::UserSequence& sequence,
                                           const catalog::Catalog& cat);

  /// Teacher-phrased (or fallback) first-person intention; the I1 slot.
  std::string extract_vague_intention(const std::string& review_text);

  /// The I1* variant prompted with both the review and the item title.
  std::string extract_vague_intention_star(const std::string& review_text,
                                           const std::string& item_title);

  /// Categories joined with ", " plus a trailing period; the I2 slot.
  /// Deterministic, never calls the teacher.
  static std::string derive_specific_intention(const catalog::ItemRecord& item);

  bool has_teacher() const { return teacher_ != nullptr; }
  std::uint64_t upstream_calls() const;
  const PromptSet& prompts() const { return prompts_; }

 private:
  std::string teach(const std::string& prompt);

  PromptSet prompts_;
  std::shared_ptr<TeacherClient> teacher_;
  std::shared_ptr<AnnotationCache> cache_;
  Options options_;
  mutable std::mutex mutex_;
  std::uint64_t upstream_calls_ = 0;
};

/// Fill every slot the template asks for except CandidateItems and
/// TargetItem, which the caller owns: history renders from the prefix,
/// teacher slots go through the annotator, the specific intention comes from
/// the target item's categories and the vague intention from the target
/// event's review. Missing ingredients throw SlotUnavailableError.
templates::SlotMap assemble_common_slots(
    const templates::CoarseTemplate& tmpl, const catalog::UserSequence& prefix,
    const catalog::SequenceEvent& target_event,
    const catalog::ItemRecord& target_item, const catalog::Catalog& cat,
    Annotator& annotator);

// ---------------------------------------------------------------------------
// Instances and diversity transforms
// ---------------------------------------------------------------------------

/// One corpus row.
struct InstructionInstance {
  templates::RenderedInstruction rendered;
  std::string user_id;
  std::string scenario_id;
  std::string split = "train";
  std::uint64_t sequence_no = 0;
};

json instance_to_json(const InstructionInstance& instance);
InstructionInstance instance_from_json(const json& j);

class NotReversibleError : public Error {
 public:
  using Error::Error;
};

/// Swap the input and output roles of an instance whose template has a
/// registered reversed counterpart. Reversing a reversed instance restores
/// the original pairing (instruction asks for the item, target is the item).
InstructionInstance apply_task_reversal(const InstructionInstance& instance,
                                        const templates::TemplateRegistry& registry);

/// The two relatedness instances: intention -> history (target is the
/// rendered history) and history -> intention ⊕ target title.
std::vector<InstructionInstance> build_relatedness_pair(
    const templates::TemplateRegistry& registry,
    const catalog::UserSequence& history, const catalog::Catalog& cat,
    const std::string& intention_text, const catalog::ItemRecord& target);

/// Chain-of-thought instance whose target walks from the history through the
/// explicit preference to the recommended item.
InstructionInstance build_cot_instance(const templates::TemplateRegistry& registry,
                                       const catalog::UserSequence& history,
                                       const catalog::Catalog& cat,
                                       const std::string& explicit_preference,
                                       const catalog::ItemRecord& target);

// ---------------------------------------------------------------------------
// Corpus generation
// ---------------------------------------------------------------------------

struct ScenarioSpec {
  std::string id;
  templates::AspectTags aspects;
  templates::StrategyTag strategy = templates::StrategyTag::Plain;
  std::size_t quota = 0;
};

struct GenerationConfig {
  std::vector<ScenarioSpec> scenarios;
  std::uint64_t seed = 0;
  std::size_t rerank_negatives = 9;
  std::string purpose = "training";
};

struct CorpusStats {
  std::size_t total = 0;
  std::size_t preference_describing = 0;
  std::size_t intention_describing = 0;
  std::size_t skipped = 0;
  bool partial = false;  // teacher budget exhausted mid-run
  double mean_instruction_words = 0.0;
  std::map<std::string, std::size_t> per_template;
  std::map<std::string, std::size_t> per_scenario;
  std::uint64_t upstream_calls = 0;
  int prompt_version = 0;

  json to_json() const;
};

/// Draw instances per the scenario mix and write them as line-delimited JSON.
/// Deterministic for a fixed (catalog, sequences, config, seed) and a
/// deterministic teacher. Budget exhaustion truncates the corpus and appends
/// an explicit partial-result marker line.
CorpusStats generate_corpus(const GenerationConfig& config,
                            const catalog::Catalog& cat,
                            const std::vector<catalog::UserSequence>& sequences,
                            const templates::TemplateRegistry& registry,
                            Annotator& annotator, std::ostream& out);

// ---------------------------------------------------------------------------
// Cache warming (the `annotate` command)
// ---------------------------------------------------------------------------

struct AnnotateStats {
  std::size_t tasks = 0;
  std::size_t failures = 0;
  std::uint64_t upstream_calls = 0;
  json to_json() const;
};

/// Run every teacher prompt the scenario mix will need (train targets plus
/// validation/test targets) into the cache, with a bounded worker pool.
/// Assembly later reads only the warm cache, so concurrency never changes
/// output bytes.
AnnotateStats warm_cache(const GenerationConfig& config,
                         const catalog::Catalog& cat,
                         const std::vector<catalog::UserSequence>& sequences,
                         const templates::TemplateRegistry& registry,
                         Annotator& annotator, std::size_t concurrency = 4);

// ---------------------------------------------------------------------------
// Audit sheets
// ---------------------------------------------------------------------------

/// The four quality-review questions answered per sampled instance.
extern const std::array<const char*, 4> kAuditQuestions;

struct AuditSampleStats {
  std::size_t preference_rows = 0;
  std::size_t intention_rows = 0;
  bool short_of_quota = false;
};

/// Pair sampled corpus rows with their source data and empty verdict fields.
AuditSampleStats audit_sample(std::istream& corpus, std::size_t n_per_kind,
                              std::uint64_t seed, std::ostream& sheet);

struct AuditAggregate {
  // kind -> per-question {yes, answered} counts.
  std::map<std::string, std::array<std::pair<std::size_t, std::size_t>, 4>>
      counts;
  json to_json() const;
};

AuditAggregate aggregate_audit(std::istream& sheet);

}  // namespace ricot::annotator
