// Copyright (c) 2026 the ricot authors
// SPDX-License-Identifier: Apache-2.0

#include "ricot/templates.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "embedded_data.hpp"
#include "ricot/digest.hpp"
#include "ricot/jsonl.hpp"
#include "ricot/text.hpp"

namespace ricot::templates {

// ---------------------------------------------------------------------------
// Enum names
// ---------------------------------------------------------------------------

std::string to_string(Preference p) {
  switch (p) {
    case Preference::P0_None: return "P0";
    case Preference::P1_Implicit: return "P1";
    case Preference::P2_Explicit: return "P2";
  }
  return "?";
}

std::string to_string(Intention i) {
  switch (i) {
    case Intention::I0_None: return "I0";
    case Intention::I1_Vague: return "I1";
    case Intention::I2_Specific: return "I2";
  }
  return "?";
}

std::string to_string(TaskForm t) {
  switch (t) {
    case TaskForm::T0_Pointwise: return "T0";
    case TaskForm::T1_Pairwise: return "T1";
    case TaskForm::T2_Matching: return "T2";
    case TaskForm::T3_Reranking: return "T3";
  }
  return "?";
}

std::string AspectTags::to_string() const {
  return templates::to_string(preference) + "," +
         templates::to_string(intention) + "," +
         templates::to_string(task_form);
}

AspectTags AspectTags::parse(std::string_view p, std::string_view i,
                             std::string_view t) {
  AspectTags tags;
  if (p == "P0") tags.preference = Preference::P0_None;
  else if (p == "P1") tags.preference = Preference::P1_Implicit;
  else if (p == "P2") tags.preference = Preference::P2_Explicit;
  else throw ConfigError("aspects.p: unknown value \"" + std::string(p) + "\"");
  if (i == "I0") tags.intention = Intention::I0_None;
  else if (i == "I1") tags.intention = Intention::I1_Vague;
  else if (i == "I2") tags.intention = Intention::I2_Specific;
  else throw ConfigError("aspects.i: unknown value \"" + std::string(i) + "\"");
  if (t == "T0") tags.task_form = TaskForm::T0_Pointwise;
  else if (t == "T1") tags.task_form = TaskForm::T1_Pairwise;
  else if (t == "T2") tags.task_form = TaskForm::T2_Matching;
  else if (t == "T3") tags.task_form = TaskForm::T3_Reranking;
  else throw ConfigError("aspects.t: unknown value \"" + std::string(t) + "\"");
  return tags;
}

std::string to_string(SlotName s) {
  switch (s) {
    case SlotName::HistoricalInteractions: return "HistoricalInteractions";
    case SlotName::ExplicitPreference: return "ExplicitPreference";
    case SlotName::VagueIntention: return "VagueIntention";
    case SlotName::SpecificIntention: return "SpecificIntention";
    case SlotName::CandidateItems: return "CandidateItems";
    case SlotName::TargetItem: return "TargetItem";
  }
  return "?";
}

std::optional<SlotName> parse_slot_name(std::string_view s) {
  if (s == "HistoricalInteractions") return SlotName::HistoricalInteractions;
  if (s == "ExplicitPreference") return SlotName::ExplicitPreference;
  if (s == "VagueIntention") return SlotName::VagueIntention;
  if (s == "SpecificIntention") return SlotName::SpecificIntention;
  if (s == "CandidateItems") return SlotName::CandidateItems;
  if (s == "TargetItem") return SlotName::TargetItem;
  return std::nullopt;
}

std::string to_string(StrategyTag s) {
  switch (s) {
    case StrategyTag::Plain: return "plain";
    case StrategyTag::TaskReversal: return "task_reversal";
    case StrategyTag::Relatedness: return "relatedness";
    case StrategyTag::CoT: return "cot";
  }
  return "?";
}

StrategyTag parse_strategy(std::string_view s) {
  if (s == "plain") return StrategyTag::Plain;
  if (s == "task_reversal") return StrategyTag::TaskReversal;
  if (s == "relatedness") return StrategyTag::Relatedness;
  if (s == "cot") return StrategyTag::CoT;
  throw ConfigError("strategy: unknown value \"" + std::string(s) + "\"");
}

std::string to_string(TargetSchema s) {
  switch (s) {
    case TargetSchema::TargetItemTitle: return "target_item_title";
    case TargetSchema::YesNo: return "yes_no";
    case TargetSchema::ReasoningThenItem: return "reasoning_then_item";
    case TargetSchema::FreeTextInference: return "free_text_inference";
  }
  return "?";
}

TargetSchema parse_target_schema(std::string_view s) {
  if (s == "target_item_title") return TargetSchema::TargetItemTitle;
  if (s == "yes_no") return TargetSchema::YesNo;
  if (s == "reasoning_then_item") return TargetSchema::ReasoningThenItem;
  if (s == "free_text_inference") return TargetSchema::FreeTextInference;
  throw ConfigError("target_schema: unknown value \"" + std::string(s) + "\"");
}

std::string to_string(SlotSource s) {
  switch (s) {
    case SlotSource::FromHistory: return "from_history";
    case SlotSource::FromTeacher: return "from_teacher";
    case SlotSource::FromCategories: return "from_categories";
    case SlotSource::FromReview: return "from_review";
    case SlotSource::FromCandidateSampler: return "from_candidate_sampler";
    case SlotSource::FromTargetItem: return "from_target_item";
  }
  return "?";
}

SlotSource parse_slot_source(std::string_view s) {
  if (s == "from_history") return SlotSource::FromHistory;
  if (s == "from_teacher") return SlotSource::FromTeacher;
  if (s == "from_categories") return SlotSource::FromCategories;
  if (s == "from_review") return SlotSource::FromReview;
  if (s == "from_candidate_sampler") return SlotSource::FromCandidateSampler;
  if (s == "from_target_item") return SlotSource::FromTargetItem;
  throw ConfigError("slot source: unknown value \"" + std::string(s) + "\"");
}

// ---------------------------------------------------------------------------
// Placeholders and instantiation
// ---------------------------------------------------------------------------

MissingSlotError::MissingSlotError(SlotName s)
    : TemplateError("missing slot: " + to_string(s)), slot(s) {}
UnexpectedSlotError::UnexpectedSlotError(SlotName s)
    : TemplateError("unexpected slot: " + to_string(s)), slot(s) {}
EmptySlotError::EmptySlotError(SlotName s)
    : TemplateError("empty slot: " + to_string(s)), slot(s) {}

namespace {

std::vector<SlotName> extract_placeholders(const std::string& body) {
  std::vector<SlotName> out;
  std::size_t pos = 0;
  while (pos < body.size()) {
    const std::size_t open = body.find('{', pos);
    if (open == std::string::npos) {
      if (body.find('}', pos) != std::string::npos) {
        throw TemplateError("template body: stray '}'");
      }
      break;
    }
    const std::size_t close = body.find('}', open + 1);
    if (close == std::string::npos) {
      throw TemplateError("template body: unterminated '{'");
    }
    const std::string name = body.substr(open + 1, close - open - 1);
    const auto slot = parse_slot_name(name);
    if (!slot) {
      throw TemplateError("template body: unknown placeholder \"" + name +
                          "\"");
    }
    out.push_back(*slot);
    pos = close + 1;
  }
  return out;
}

/// Braces in slot values would read back as placeholders; turn them into
/// parentheses.
std::string sanitize_slot_text(std::string_view text) {
  std::string out(text);
  for (char& c : out) {
    if (c == '{') c = '(';
    if (c == '}') c = ')';
  }
  return out;
}

std::string strip_trailing_period(std::string s) {
  while (!s.empty() && (s.back() == ' ' || s.back() == '.')) s.pop_back();
  return s;
}

std::string format_target(const CoarseTemplate& tmpl, const TargetSpec& spec) {
  switch (tmpl.target_schema) {
    case TargetSchema::TargetItemTitle: {
      const auto* t = std::get_if<TargetItemTitle>(&spec);
      if (!t) throw TemplateError(tmpl.template_id + ": target must be an item title");
      return collapse_whitespace(t->title);
    }
    case TargetSchema::YesNo: {
      const auto* t = std::get_if<TargetYesNo>(&spec);
      if (!t) throw TemplateError(tmpl.template_id + ": target must be yes/no");
      return t->yes ? "Yes" : "No";
    }
    case TargetSchema::ReasoningThenItem: {
      const auto* t = std::get_if<TargetReasoning>(&spec);
      if (!t) throw TemplateError(tmpl.template_id + ": target must be a reasoning pair");
      return "According to the user's historical interactions, we can infer "
             "his " +
             strip_trailing_period(collapse_whitespace(t->preference)) +
             ". Finally, we recommend him " +
             collapse_whitespace(t->item_title) + ".";
    }
    case TargetSchema::FreeTextInference: {
      const auto* t = std::get_if<TargetFreeText>(&spec);
      if (!t) throw TemplateError(tmpl.template_id + ": target must be free text");
      return trim(t->text);
    }
  }
  throw TemplateError("unreachable target schema");
}

}  // namespace

std::vector<SlotName> CoarseTemplate::placeholders() const {
  auto all = extract_placeholders(body);
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  return all;
}

RenderedInstruction instantiate(const CoarseTemplate& tmpl,
                                const SlotMap& slots,
                                const TargetSpec& target) {
  const auto required = tmpl.placeholders();
  for (const auto slot : required) {
    const auto it = slots.find(slot);
    if (it == slots.end()) throw MissingSlotError(slot);
    if (trim(it->second.text).empty()) throw EmptySlotError(slot);
  }
  for (const auto& [slot, _] : slots) {
    if (std::find(required.begin(), required.end(), slot) == required.end()) {
      throw UnexpectedSlotError(slot);
    }
  }

  std::string text;
  text.reserve(tmpl.body.size() * 2);
  std::size_t pos = 0;
  while (pos < tmpl.body.size()) {
    const std::size_t open = tmpl.body.find('{', pos);
    if (open == std::string::npos) {
      text.append(tmpl.body, pos, std::string::npos);
      break;
    }
    text.append(tmpl.body, pos, open - pos);
    const std::size_t close = tmpl.body.find('}', open + 1);
    const auto slot = *parse_slot_name(tmpl.body.substr(open + 1, close - open - 1));
    text += sanitize_slot_text(slots.at(slot).text);
    pos = close + 1;
  }

  RenderedInstruction rendered;
  rendered.instruction_text = std::move(text);
  rendered.target_output = format_target(tmpl, target);
  rendered.aspects = tmpl.aspects;
  rendered.template_id = tmpl.template_id;
  rendered.slots = slots;
  if (rendered.target_output.empty()) {
    throw TemplateError(tmpl.template_id + ": empty target output");
  }
  return rendered;
}

std::string render_title_list(const std::vector<std::string>& titles) {
  if (titles.empty()) throw TemplateError("render_item_list: empty list");
  std::string out;
  for (std::size_t i = 0; i < titles.size(); ++i) {
    if (i > 0) out.push_back('\n');
    out += std::to_string(i + 1);
    out += ". ";
    out += collapse_whitespace(titles[i]);
  }
  return out;
}

std::string render_item_list(const std::vector<catalog::ItemRecord>& items) {
  std::vector<std::string> titles;
  titles.reserve(items.size());
  for (const auto& item : items) titles.push_back(item.title);
  return render_title_list(titles);
}

std::string render_history(const catalog::UserSequence& sequence,
                           const catalog::Catalog& cat) {
  if (sequence.events.empty()) {
    throw TemplateError("render_history: empty sequence");
  }
  std::string out;
  for (std::size_t i = 0; i < sequence.events.size(); ++i) {
    if (i > 0) out += " → ";
    out += std::to_string(i + 1);
    out += ". ";
    out += collapse_whitespace(cat.item(sequence.events[i].item_id).title);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Registry
// ---------------------------------------------------------------------------

namespace {

std::string category_of(const std::string& template_id) {
  if (template_id.rfind("pref-", 0) == 0) return "preference";
  if (template_id.rfind("int-", 0) == 0) return "intention";
  if (template_id.rfind("comb-", 0) == 0) return "combined";
  throw TemplateError("template id \"" + template_id +
                      "\" has no category prefix");
}

bool has_slot(const std::vector<SlotName>& slots, SlotName s) {
  return std::find(slots.begin(), slots.end(), s) != slots.end();
}

void validate_template(const CoarseTemplate& t) {
  const auto slots = t.placeholders();
  const auto fail = [&](const std::string& why) {
    throw TemplateError(t.template_id + ": " + why);
  };
  if (t.aspects.preference == Preference::P1_Implicit &&
      !has_slot(slots, SlotName::HistoricalInteractions)) {
    fail("P1 requires a {HistoricalInteractions} placeholder");
  }
  if (t.aspects.task_form == TaskForm::T3_Reranking &&
      !has_slot(slots, SlotName::CandidateItems)) {
    fail("T3 requires a {CandidateItems} placeholder");
  }
  if (t.aspects.task_form == TaskForm::T0_Pointwise &&
      t.target_schema != TargetSchema::YesNo) {
    fail("T0 requires the yes_no target schema");
  }
  // Reversal and relatedness templates invert the conditioning, so the
  // query-side checks apply to plain templates only.
  if (t.strategy == StrategyTag::Plain) {
    if (t.aspects.preference == Preference::P2_Explicit &&
        !has_slot(slots, SlotName::ExplicitPreference)) {
      fail("plain P2 requires an {ExplicitPreference} placeholder");
    }
    if (t.aspects.intention == Intention::I1_Vague &&
        !has_slot(slots, SlotName::VagueIntention)) {
      fail("plain I1 requires a {VagueIntention} placeholder");
    }
    if (t.aspects.intention == Intention::I2_Specific &&
        !has_slot(slots, SlotName::SpecificIntention)) {
      fail("plain I2 requires a {SpecificIntention} placeholder");
    }
  }
}

}  // namespace

TemplateRegistry TemplateRegistry::load_bytes(std::string_view data_bytes,
                                              std::string_view manifest_bytes) {
  json manifest = json::parse(manifest_bytes, nullptr, false);
  if (manifest.is_discarded() || !manifest.is_object()) {
    throw TemplateError("template manifest: invalid JSON");
  }
  const std::string expected_sha = manifest.value("sha256", "");
  const auto expected_count = manifest.value("template_count", std::size_t{0});
  if (sha256_hex(data_bytes) != expected_sha) {
    throw TemplateError("template data: checksum mismatch against manifest");
  }

  TemplateRegistry registry;
  std::istringstream in{std::string(data_bytes)};
  for_each_jsonl(in, [&](json j, std::size_t line_no) {
    if (!j.is_object()) {
      throw TemplateError("template data line " + std::to_string(line_no) +
                          ": not an object");
    }
    CoarseTemplate t;
    t.template_id = j.at("id").get<std::string>();
    const auto& aspects = j.at("aspects");
    t.aspects = AspectTags::parse(aspects.at("p").get<std::string>(),
                                  aspects.at("i").get<std::string>(),
                                  aspects.at("t").get<std::string>());
    t.strategy = parse_strategy(j.at("strategy").get<std::string>());
    t.target_schema = parse_target_schema(j.at("target_schema").get<std::string>());
    t.body = j.at("body").get<std::string>();
    t.category = category_of(t.template_id);
    if (j.contains("reversed_id")) {
      t.reversed_id = j["reversed_id"].get<std::string>();
    }
    validate_template(t);
    registry.templates_.push_back(std::move(t));
  });

  if (registry.templates_.size() != expected_count) {
    throw TemplateError("template data: expected " +
                        std::to_string(expected_count) + " templates, found " +
                        std::to_string(registry.templates_.size()));
  }
  std::set<std::string> ids;
  for (const auto& t : registry.templates_) {
    if (!ids.insert(t.template_id).second) {
      throw TemplateError("duplicate template id " + t.template_id);
    }
  }
  for (const auto& t : registry.templates_) {
    if (!t.reversed_id) continue;
    const auto& other = registry.by_id(*t.reversed_id);
    if (!other.reversed_id || *other.reversed_id != t.template_id) {
      throw TemplateError("reversal pair " + t.template_id + " <-> " +
                          *t.reversed_id + " is not mutual");
    }
  }
  return registry;
}

TemplateRegistry TemplateRegistry::load_files(const std::string& data_path,
                                              const std::string& manifest_path) {
  return load_bytes(read_file(data_path), read_file(manifest_path));
}

const TemplateRegistry& TemplateRegistry::builtin() {
  static const TemplateRegistry registry =
      load_bytes(detail::embedded_templates_jsonl(),
                 detail::embedded_templates_manifest());
  return registry;
}

const CoarseTemplate& TemplateRegistry::by_id(
    const std::string& template_id) const {
  for (const auto& t : templates_) {
    if (t.template_id == template_id) return t;
  }
  throw NoTemplateError("no template with id \"" + template_id + "\"");
}

std::vector<CoarseTemplate> TemplateRegistry::select(
    const AspectTags& aspects, std::optional<StrategyTag> strategy) const {
  std::vector<CoarseTemplate> out;
  for (const auto& t : templates_) {
    if (!(t.aspects == aspects)) continue;
    if (strategy && t.strategy != *strategy) continue;
    out.push_back(t);
  }
  if (out.empty()) {
    throw NoTemplateError("no template for scenario " + aspects.to_string() +
                          (strategy ? " with strategy " + to_string(*strategy)
                                    : std::string{}));
  }
  std::sort(out.begin(), out.end(),
            [](const CoarseTemplate& a, const CoarseTemplate& b) {
              return a.template_id < b.template_id;
            });
  return out;
}

}  // namespace ricot::templates
