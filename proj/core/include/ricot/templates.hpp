// Copyright (c) 2026 the ricot authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ricot/catalog.hpp"
#include "ricot/errors.hpp"

namespace ricot::templates {

// ---------------------------------------------------------------------------
// Instruction taxonomy
// ---------------------------------------------------------------------------

/// How much the instruction reveals about the user's long-term tastes.
enum class Preference { P0_None, P1_Implicit, P2_Explicit };

/// How clearly the instruction states the user's immediate demand.
enum class Intention { I0_None, I1_Vague, I2_Specific };

/// The role the model is asked to play. T1 (pairwise) is representable but
/// no built-in template carries it.
enum class TaskForm { T0_Pointwise, T1_Pairwise, T2_Matching, T3_Reranking };

struct AspectTags {
  Preference preference = Preference::P0_None;
  Intention intention = Intention::I0_None;
  TaskForm task_form = TaskForm::T2_Matching;

  bool operator==(const AspectTags&) const = default;

  /// "P1,I0,T3"
  std::string to_string() const;
  static AspectTags parse(std::string_view p, std::string_view i,
                          std::string_view t);
};

std::string to_string(Preference p);
std::string to_string(Intention i);
std::string to_string(TaskForm t);

/// Closed set of placeholder names a template body may use.
enum class SlotName {
  HistoricalInteractions,
  ExplicitPreference,
  VagueIntention,
  SpecificIntention,
  CandidateItems,
  TargetItem,
};

std::string to_string(SlotName s);
std::optional<SlotName> parse_slot_name(std::string_view s);

enum class StrategyTag { Plain, TaskReversal, Relatedness, CoT };
std::string to_string(StrategyTag s);
StrategyTag parse_strategy(std::string_view s);

enum class TargetSchema {
  TargetItemTitle,
  YesNo,
  ReasoningThenItem,
  FreeTextInference,
};
std::string to_string(TargetSchema s);
TargetSchema parse_target_schema(std::string_view s);

struct CoarseTemplate {
  std::string template_id;
  AspectTags aspects;
  StrategyTag strategy = StrategyTag::Plain;
  std::string body;  // text with {SlotName} placeholders
  TargetSchema target_schema = TargetSchema::TargetItemTitle;
  /// "preference", "intention" or "combined", derived from the id prefix.
  std::string category;
  /// Counterpart template for turn-the-task-around pairs.
  std::optional<std::string> reversed_id;

  std::vector<SlotName> placeholders() const;
};

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

enum class SlotSource {
  FromHistory,
  FromTeacher,
  FromCategories,
  FromReview,
  FromCandidateSampler,
  FromTargetItem,
};
std::string to_string(SlotSource s);
SlotSource parse_slot_source(std::string_view s);

struct SlotValue {
  std::string text;
  SlotSource source = SlotSource::FromHistory;
};

using SlotMap = std::map<SlotName, SlotValue>;

/// What the model should answer. The alternative chosen must match the
/// template's target_schema.
struct TargetItemTitle {
  std::string title;
};
struct TargetYesNo {
  bool yes = true;
};
struct TargetReasoning {
  std::string preference;
  std::string item_title;
};
struct TargetFreeText {
  std::string text;
};
using TargetSpec =
    std::variant<TargetItemTitle, TargetYesNo, TargetReasoning, TargetFreeText>;

struct RenderedInstruction {
  std::string instruction_text;
  std::string target_output;
  AspectTags aspects;
  std::string template_id;
  SlotMap slots;  // filled values with per-slot provenance
};

// Typed instantiation errors.
class TemplateError : public Error {
 public:
  using Error::Error;
};
class MissingSlotError : public TemplateError {
 public:
  explicit MissingSlotError(SlotName slot);
  SlotName slot;
};
class UnexpectedSlotError : public TemplateError {
 public:
  explicit UnexpectedSlotError(SlotName slot);
  SlotName slot;
};
class EmptySlotError : public TemplateError {
 public:
  explicit EmptySlotError(SlotName slot);
  SlotName slot;
};
class NoTemplateError : public TemplateError {
 public:
  using TemplateError::TemplateError;
};

/// Fill a template. `slots` must cover exactly the placeholders of the body;
/// the target is formatted according to the template's target_schema. Slot
/// text has braces normalized to parentheses so rendered instructions never
/// contain a stray placeholder delimiter.
RenderedInstruction instantiate(const CoarseTemplate& tmpl,
                                const SlotMap& slots, const TargetSpec& target);

/// "1. <title>\n2. <title>" with embedded newlines collapsed.
std::string render_item_list(const std::vector<catalog::ItemRecord>& items);
std::string render_title_list(const std::vector<std::string>& titles);

/// "1. <title> → 2. <title>" in chronological order. Unknown item ids are a
/// catalog integrity violation.
std::string render_history(const catalog::UserSequence& sequence,
                           const catalog::Catalog& cat);

// ---------------------------------------------------------------------------
// Registry
// ---------------------------------------------------------------------------

/// The built-in coarse templates, loaded from a checksummed data file.
class TemplateRegistry {
 public:
  /// Registry compiled into the library (same bytes as the shipped data
  /// files).
  static const TemplateRegistry& builtin();

  /// Load from external data + manifest files; the manifest carries the
  /// sha256 of the data file and the expected template count.
  static TemplateRegistry load_files(const std::string& data_path,
                                     const std::string& manifest_path);
  static TemplateRegistry load_bytes(std::string_view data_bytes,
                                     std::string_view manifest_bytes);

  const std::vector<CoarseTemplate>& all() const { return templates_; }
  const CoarseTemplate& by_id(const std::string& template_id) const;

  /// Templates matching the aspect triple exactly (and the strategy, when
  /// given), ordered by template_id. Empty matches throw NoTemplateError.
  std::vector<CoarseTemplate> select(
      const AspectTags& aspects,
      std::optional<StrategyTag> strategy = {}) const;

 private:
  std::vector<CoarseTemplate> templates_;
};

}  // namespace ricot::templates
