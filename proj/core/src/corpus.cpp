// Copyright (c) 2026 the ricot authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <atomic>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "ricot/annotator.hpp"
#include "ricot/matcher.hpp"
#include "ricot/rng.hpp"
#include "ricot/text.hpp"

namespace ricot::annotator {

using templates::AspectTags;
using templates::CoarseTemplate;
using templates::RenderedInstruction;
using templates::SlotMap;
using templates::SlotName;
using templates::SlotSource;
using templates::SlotValue;
using templates::StrategyTag;
using templates::TargetSchema;

// ---------------------------------------------------------------------------
// Instance serialization
// ---------------------------------------------------------------------------

json instance_to_json(const InstructionInstance& instance) {
  const auto& r = instance.rendered;
  json provenance = json::object();
  for (const auto& [slot, value] : r.slots) {
    provenance[templates::to_string(slot)] =
        json{{"source", templates::to_string(value.source)},
             {"text", value.text}};
  }
  return json{{"instruction", r.instruction_text},
              {"output", r.target_output},
              {"aspects",
               json{{"p", templates::to_string(r.aspects.preference)},
                    {"i", templates::to_string(r.aspects.intention)},
                    {"t", templates::to_string(r.aspects.task_form)}}},
              {"template_id", r.template_id},
              {"scenario", instance.scenario_id},
              {"user", instance.user_id},
              {"split", instance.split},
              {"provenance", std::move(provenance)}};
}

InstructionInstance instance_from_json(const json& j) {
  InstructionInstance instance;
  auto& r = instance.rendered;
  r.instruction_text = j.at("instruction").get<std::string>();
  r.target_output = j.at("output").get<std::string>();
  const auto& aspects = j.at("aspects");
  r.aspects = AspectTags::parse(aspects.at("p").get<std::string>(),
                                aspects.at("i").get<std::string>(),
                                aspects.at("t").get<std::string>());
  r.template_id = j.at("template_id").get<std::string>();
  instance.scenario_id = j.at("scenario").get<std::string>();
  instance.user_id = j.at("user").get<std::string>();
  instance.split = j.at("split").get<std::string>();
  for (const auto& [key, value] : j.at("provenance").items()) {
    const auto slot = templates::parse_slot_name(key);
    if (!slot) throw DataError("corpus row: unknown provenance slot " + key);
    r.slots[*slot] =
        SlotValue{value.at("text").get<std::string>(),
                  templates::parse_slot_source(value.at("source").get<std::string>())};
  }
  return instance;
}

// ---------------------------------------------------------------------------
// Diversity transforms
// ---------------------------------------------------------------------------

namespace {

SlotSource default_source(SlotName slot) {
  switch (slot) {
    case SlotName::HistoricalInteractions: return SlotSource::FromHistory;
    case SlotName::ExplicitPreference: return SlotSource::FromTeacher;
    case SlotName::VagueIntention: return SlotSource::FromReview;
    case SlotName::SpecificIntention: return SlotSource::FromCategories;
    case SlotName::CandidateItems: return SlotSource::FromCandidateSampler;
    case SlotName::TargetItem: return SlotSource::FromTargetItem;
  }
  return SlotSource::FromHistory;
}

std::vector<SlotName> slot_difference(const CoarseTemplate& a,
                                      const CoarseTemplate& b) {
  std::vector<SlotName> out;
  const auto bs = b.placeholders();
  for (const auto slot : a.placeholders()) {
    if (std::find(bs.begin(), bs.end(), slot) == bs.end()) out.push_back(slot);
  }
  return out;
}

}  // namespace

InstructionInstance apply_task_reversal(
    const InstructionInstance& instance,
    const templates::TemplateRegistry& registry) {
  const auto& tmpl = registry.by_id(instance.rendered.template_id);
  if (!tmpl.reversed_id) {
    throw NotReversibleError("template " + tmpl.template_id +
                             " has no reversed counterpart");
  }
  const auto& counterpart = registry.by_id(*tmpl.reversed_id);
  const auto& orig_slots = instance.rendered.slots;

  SlotMap slots;
  templates::TargetSpec target;

  if (tmpl.strategy != StrategyTag::TaskReversal) {
    // Forward: the counterpart conditions on the original's answer and asks
    // for the slot the two bodies do not share.
    const auto swapped = slot_difference(tmpl, counterpart);
    if (swapped.size() != 1) {
      throw NotReversibleError("template " + tmpl.template_id +
                               " has no single swappable slot");
    }
    for (const auto slot : counterpart.placeholders()) {
      if (slot == SlotName::TargetItem) {
        if (tmpl.target_schema != TargetSchema::TargetItemTitle) {
          throw NotReversibleError("original target is not an item title");
        }
        slots[slot] = SlotValue{instance.rendered.target_output,
                                SlotSource::FromTargetItem};
      } else if (const auto it = orig_slots.find(slot); it != orig_slots.end()) {
        slots[slot] = it->second;
      } else {
        throw NotReversibleError("counterpart slot " +
                                 templates::to_string(slot) +
                                 " is not derivable from the instance");
      }
    }
    target = templates::TargetFreeText{orig_slots.at(swapped.front()).text};
  } else {
    // Backward: restore the plain pairing. The counterpart's extra slot is
    // the query, which the reversed instance carries as its answer; the item
    // must be present as a slot to become the answer again.
    const auto swapped = slot_difference(counterpart, tmpl);
    if (swapped.size() != 1) {
      throw NotReversibleError("template " + tmpl.template_id +
                               " has no single swappable slot");
    }
    if (counterpart.target_schema != TargetSchema::TargetItemTitle) {
      throw NotReversibleError("counterpart target is not an item title");
    }
    const auto item_it = orig_slots.find(SlotName::TargetItem);
    if (item_it == orig_slots.end()) {
      throw NotReversibleError("reversed instance carries no target item");
    }
    for (const auto slot : counterpart.placeholders()) {
      if (slot == swapped.front()) {
        slots[slot] = SlotValue{instance.rendered.target_output,
                                default_source(slot)};
      } else if (const auto it = orig_slots.find(slot); it != orig_slots.end()) {
        slots[slot] = it->second;
      } else {
        throw NotReversibleError("counterpart slot " +
                                 templates::to_string(slot) +
                                 " is not derivable from the instance");
      }
    }
    target = templates::TargetItemTitle{item_it->second.text};
  }

  InstructionInstance out;
  out.rendered = templates::instantiate(counterpart, slots, target);
  out.user_id = instance.user_id;
  out.scenario_id = instance.scenario_id;
  out.split = instance.split;
  out.sequence_no = instance.sequence_no;
  return out;
}

std::vector<InstructionInstance> build_relatedness_pair(
    const templates::TemplateRegistry& registry,
    const catalog::UserSequence& history, const catalog::Catalog& cat,
    const std::string& intention_text, const catalog::ItemRecord& target) {
  if (trim(intention_text).empty() || history.events.empty()) {
    return {};
  }
  const std::string history_text = templates::render_history(history, cat);
  std::vector<InstructionInstance> out;

  {  // intention -> history
    const auto& tmpl = registry.by_id("comb-07");
    SlotMap slots;
    slots[SlotName::VagueIntention] =
        SlotValue{intention_text, SlotSource::FromReview};
    slots[SlotName::TargetItem] =
        SlotValue{target.title, SlotSource::FromTargetItem};
    InstructionInstance instance;
    instance.rendered = templates::instantiate(
        tmpl, slots, templates::TargetFreeText{history_text});
    instance.user_id = history.user_id;
    out.push_back(std::move(instance));
  }
  {  // history -> intention ⊕ item
    const auto& tmpl = registry.by_id("comb-08");
    SlotMap slots;
    slots[SlotName::HistoricalInteractions] =
        SlotValue{history_text, SlotSource::FromHistory};
    InstructionInstance instance;
    instance.rendered = templates::instantiate(
        tmpl, slots,
        templates::TargetFreeText{intention_text + " " +
                                  collapse_whitespace(target.title)});
    instance.user_id = history.user_id;
    out.push_back(std::move(instance));
  }
  return out;
}

InstructionInstance build_cot_instance(
    const templates::TemplateRegistry& registry,
    const catalog::UserSequence& history, const catalog::Catalog& cat,
    const std::string& explicit_preference, const catalog::ItemRecord& target) {
  if (trim(explicit_preference).empty()) {
    throw SlotUnavailableError("cot instance: missing explicit preference");
  }
  const auto& tmpl = registry.by_id("pref-03");
  SlotMap slots;
  slots[SlotName::HistoricalInteractions] =
      SlotValue{templates::render_history(history, cat), SlotSource::FromHistory};
  InstructionInstance instance;
  instance.rendered = templates::instantiate(
      tmpl, slots,
      templates::TargetReasoning{explicit_preference, target.title});
  instance.user_id = history.user_id;
  return instance;
}

// ---------------------------------------------------------------------------
// Slot assembly
// ---------------------------------------------------------------------------

templates::SlotMap assemble_common_slots(
    const templates::CoarseTemplate& tmpl, const catalog::UserSequence& prefix,
    const catalog::SequenceEvent& target_event,
    const catalog::ItemRecord& target_item, const catalog::Catalog& cat,
    Annotator& annotator) {
  SlotMap slots;
  for (const auto slot : tmpl.placeholders()) {
    switch (slot) {
      case SlotName::HistoricalInteractions:
        if (prefix.events.empty()) {
          throw SlotUnavailableError("empty history prefix");
        }
        slots[slot] = SlotValue{templates::render_history(prefix, cat),
                                SlotSource::FromHistory};
        break;
      case SlotName::ExplicitPreference:
        slots[slot] =
            SlotValue{annotator.generate_explicit_preference(prefix, cat),
                      SlotSource::FromTeacher};
        break;
      case SlotName::VagueIntention: {
        if (!target_event.review_text) {
          throw SlotUnavailableError("no review on the target event");
        }
        slots[slot] =
            SlotValue{annotator.extract_vague_intention(*target_event.review_text),
                      SlotSource::FromReview};
        break;
      }
      case SlotName::SpecificIntention:
        slots[slot] = SlotValue{Annotator::derive_specific_intention(target_item),
                                SlotSource::FromCategories};
        break;
      case SlotName::CandidateItems:
      case SlotName::TargetItem:
        break;  // owned by the caller
    }
  }
  return slots;
}

// ---------------------------------------------------------------------------
// Corpus generation
// ---------------------------------------------------------------------------

namespace {

struct TrainView {
  catalog::UserSequence prefix;  // events before the training target
  catalog::SequenceEvent target;
};

/// The last event inside the training region (everything but the two
/// held-out events) becomes the corpus target.
std::optional<TrainView> train_view(const catalog::UserSequence& seq) {
  if (seq.events.size() < 3) return std::nullopt;
  const std::size_t target_idx = seq.events.size() - 3;
  TrainView view;
  view.prefix.user_id = seq.user_id;
  view.prefix.events.assign(
      seq.events.begin(),
      seq.events.begin() + static_cast<std::ptrdiff_t>(target_idx));
  view.target = seq.events[target_idx];
  return view;
}

std::vector<std::string> item_ids_of(const catalog::UserSequence& seq) {
  std::vector<std::string> out;
  out.reserve(seq.events.size());
  for (const auto& e : seq.events) out.push_back(e.item_id);
  return out;
}

/// What a task-reversal instance must produce as its answer.
enum class ReversalAnswer { ExplicitPreference, SpecificIntention, HistoryThenItem };

ReversalAnswer reversal_answer(const std::string& template_id) {
  static const std::map<std::string, ReversalAnswer> table{
      {"pref-14", ReversalAnswer::ExplicitPreference},
      {"pref-15", ReversalAnswer::ExplicitPreference},
      {"comb-06", ReversalAnswer::ExplicitPreference},
      {"int-05", ReversalAnswer::SpecificIntention},
      {"int-06", ReversalAnswer::SpecificIntention},
      {"comb-05", ReversalAnswer::SpecificIntention},
      {"comb-09", ReversalAnswer::HistoryThenItem},
  };
  const auto it = table.find(template_id);
  if (it == table.end()) {
    throw NotReversibleError("no reversal answer rule for " + template_id);
  }
  return it->second;
}

bool intention_describing(const RenderedInstruction& rendered) {
  return rendered.slots.count(SlotName::VagueIntention) > 0 ||
         rendered.slots.count(SlotName::SpecificIntention) > 0 ||
         rendered.target_output.empty();  // unreachable; keeps the partition total
}

class CorpusBuilder {
 public:
  CorpusBuilder(const GenerationConfig& config, const catalog::Catalog& cat,
                const std::vector<catalog::UserSequence>& sequences,
                const templates::TemplateRegistry& registry,
                Annotator& annotator, std::ostream& out)
      : config_(config),
        cat_(cat),
        sequences_(sequences),
        registry_(registry),
        annotator_(annotator),
        out_(out) {}

  CorpusStats run() {
    for (const auto& scenario : config_.scenarios) {
      if (stats_.partial) break;
      run_scenario(scenario);
    }
    if (stats_.partial) {
      write_jsonl(out_, json{{"__marker__", "partial_result"},
                             {"reason", "teacher budget exhausted"},
                             {"emitted", stats_.total}});
    }
    stats_.mean_instruction_words =
        stats_.total > 0 ? word_sum_ / static_cast<double>(stats_.total) : 0.0;
    stats_.upstream_calls = annotator_.upstream_calls();
    stats_.prompt_version = annotator_.prompts().version;
    return stats_;
  }

 private:
  void run_scenario(const ScenarioSpec& scenario) {
    const auto candidates = registry_.select(scenario.aspects, scenario.strategy);
    std::vector<std::size_t> order(sequences_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng order_rng(Rng::derive(config_.seed, "user-order|" + scenario.id));
    order_rng.shuffle(order);

    std::size_t emitted = 0;
    for (const auto idx : order) {
      if (emitted >= scenario.quota) break;
      const auto& seq = sequences_[idx];
      const auto view = train_view(seq);
      if (!view) {
        ++stats_.skipped;
        continue;
      }
      const auto& tmpl = pick_template(candidates, scenario, seq.user_id);
      try {
        auto instances = build_for(scenario, tmpl, *view);
        for (auto& instance : instances) {
          if (emitted >= scenario.quota) break;
          instance.scenario_id = scenario.id;
          instance.split = "train";
          emit(instance);
          ++emitted;
        }
      } catch (const BudgetExhaustedError&) {
        stats_.partial = true;
        return;
      } catch (const SlotUnavailableError&) {
        ++stats_.skipped;
      } catch (const AnnotationError&) {
        ++stats_.skipped;
      } catch (const templates::TemplateError&) {
        ++stats_.skipped;
      }
    }
  }

  const CoarseTemplate& pick_template(const std::vector<CoarseTemplate>& pool,
                                      const ScenarioSpec& scenario,
                                      const std::string& user_id) {
    Rng rng(Rng::derive(config_.seed, "tmpl|" + scenario.id + "|" + user_id));
    return pool[static_cast<std::size_t>(rng.below(pool.size()))];
  }

  std::vector<InstructionInstance> build_for(const ScenarioSpec& scenario,
                                             const CoarseTemplate& tmpl,
                                             const TrainView& view) {
    const auto& target_item = cat_.item(view.target.item_id);
    switch (tmpl.strategy) {
      case StrategyTag::Relatedness: {
        const auto intention = intention_slot(view);
        auto pair = build_relatedness_pair(registry_, view.prefix, cat_,
                                           intention, target_item);
        if (pair.empty()) {
          throw SlotUnavailableError("relatedness pair inputs missing");
        }
        return pair;
      }
      case StrategyTag::CoT: {
        auto instance = build_cot_instance(
            registry_, view.prefix, cat_,
            annotator_.generate_explicit_preference(view.prefix, cat_),
            target_item);
        return {std::move(instance)};
      }
      case StrategyTag::TaskReversal:
        return {build_reversal(tmpl, view, target_item)};
      case StrategyTag::Plain:
        return {build_plain(scenario, tmpl, view, target_item)};
    }
    throw Error("unreachable strategy");
  }

  std::string intention_slot(const TrainView& view) {
    if (!view.target.review_text) {
      throw SlotUnavailableError("no review on the target event");
    }
    return annotator_.extract_vague_intention(*view.target.review_text);
  }

  SlotMap common_slots(const CoarseTemplate& tmpl, const TrainView& view,
                       const catalog::ItemRecord& target_item) {
    return assemble_common_slots(tmpl, view.prefix, view.target, target_item,
                                 cat_, annotator_);
  }

  InstructionInstance build_plain(const ScenarioSpec& scenario,
                                  const CoarseTemplate& tmpl,
                                  const TrainView& view,
                                  const catalog::ItemRecord& target_item) {
    SlotMap slots = common_slots(tmpl, view, target_item);
    templates::TargetSpec target = templates::TargetItemTitle{target_item.title};
    const auto placeholders = tmpl.placeholders();
    const std::string scope = scenario.id + "|" + view.prefix.user_id;

    if (std::find(placeholders.begin(), placeholders.end(),
                  SlotName::CandidateItems) != placeholders.end()) {
      const auto pool = matcher::sample_uniform_pool(
          cat_, item_ids_of(view.prefix), target_item.item_id,
          config_.rerank_negatives,
          Rng::derive(config_.seed, "pool|" + scope));
      std::vector<std::string> shown = pool.negatives;
      shown.push_back(target_item.item_id);
      Rng shuffle_rng(Rng::derive(config_.seed, "present|" + scope));
      shuffle_rng.shuffle(shown);
      std::vector<std::string> titles;
      titles.reserve(shown.size());
      for (const auto& item_id : shown) titles.push_back(cat_.item(item_id).title);
      slots[SlotName::CandidateItems] = SlotValue{
          templates::render_title_list(titles), SlotSource::FromCandidateSampler};
    }
    if (std::find(placeholders.begin(), placeholders.end(),
                  SlotName::TargetItem) != placeholders.end()) {
      // Pointwise: half the instances show the true next item ("Yes"),
      // half a sampled negative ("No").
      const bool yes = (Rng::derive(config_.seed, "yesno|" + scope) & 1) == 0;
      if (yes) {
        slots[SlotName::TargetItem] =
            SlotValue{target_item.title, SlotSource::FromTargetItem};
        target = templates::TargetYesNo{true};
      } else {
        const auto pool = matcher::sample_uniform_pool(
            cat_, item_ids_of(view.prefix), target_item.item_id, 1,
            Rng::derive(config_.seed, "negpoint|" + scope));
        slots[SlotName::TargetItem] = SlotValue{
            cat_.item(pool.negatives.front()).title, SlotSource::FromTargetItem};
        target = templates::TargetYesNo{false};
      }
    }

    InstructionInstance instance;
    instance.rendered = templates::instantiate(tmpl, slots, target);
    instance.user_id = view.prefix.user_id;
    return instance;
  }

  InstructionInstance build_reversal(const CoarseTemplate& tmpl,
                                     const TrainView& view,
                                     const catalog::ItemRecord& target_item) {
    SlotMap slots = common_slots(tmpl, view, target_item);
    const auto placeholders = tmpl.placeholders();
    if (std::find(placeholders.begin(), placeholders.end(),
                  SlotName::TargetItem) != placeholders.end()) {
      slots[SlotName::TargetItem] =
          SlotValue{target_item.title, SlotSource::FromTargetItem};
    }
    std::string answer;
    switch (reversal_answer(tmpl.template_id)) {
      case ReversalAnswer::ExplicitPreference:
        answer = annotator_.generate_explicit_preference(view.prefix, cat_);
        break;
      case ReversalAnswer::SpecificIntention:
        answer = Annotator::derive_specific_intention(target_item);
        break;
      case ReversalAnswer::HistoryThenItem:
        if (view.prefix.events.empty()) {
          throw SlotUnavailableError("empty history prefix");
        }
        answer = templates::render_history(view.prefix, cat_) + " " +
                 collapse_whitespace(target_item.title);
        break;
    }
    InstructionInstance instance;
    instance.rendered =
        templates::instantiate(tmpl, slots, templates::TargetFreeText{answer});
    instance.user_id = view.prefix.user_id;
    return instance;
  }

  void emit(InstructionInstance& instance) {
    if (config_.purpose == "training" && instance.split == "test") {
      throw DataError("refusing to write a test-split instance into a "
                      "training corpus");
    }
    instance.sequence_no = stats_.total;
    write_jsonl(out_, instance_to_json(instance));
    ++stats_.total;
    if (intention_describing(instance.rendered)) {
      ++stats_.intention_describing;
    } else {
      ++stats_.preference_describing;
    }
    ++stats_.per_template[instance.rendered.template_id];
    ++stats_.per_scenario[instance.scenario_id];
    word_sum_ += static_cast<double>(word_count(instance.rendered.instruction_text));
  }

  const GenerationConfig& config_;
  const catalog::Catalog& cat_;
  const std::vector<catalog::UserSequence>& sequences_;
  const templates::TemplateRegistry& registry_;
  Annotator& annotator_;
  std::ostream& out_;
  CorpusStats stats_;
  double word_sum_ = 0.0;
};

}  // namespace

json CorpusStats::to_json() const {
  return json{{"total", total},
              {"preference_describing", preference_describing},
              {"intention_describing", intention_describing},
              {"skipped", skipped},
              {"partial", partial},
              {"mean_instruction_words", mean_instruction_words},
              {"per_template", per_template},
              {"per_scenario", per_scenario},
              {"upstream_calls", upstream_calls},
              {"prompt_version", prompt_version}};
}

CorpusStats generate_corpus(const GenerationConfig& config,
                            const catalog::Catalog& cat,
                            const std::vector<catalog::UserSequence>& sequences,
                            const templates::TemplateRegistry& registry,
                            Annotator& annotator, std::ostream& out) {
  CorpusBuilder builder(config, cat, sequences, registry, annotator, out);
  return builder.run();
}

// ---------------------------------------------------------------------------
// Cache warming
// ---------------------------------------------------------------------------

json AnnotateStats::to_json() const {
  return json{{"tasks", tasks},
              {"failures", failures},
              {"upstream_calls", upstream_calls}};
}

AnnotateStats warm_cache(const GenerationConfig& config,
                         const catalog::Catalog& cat,
                         const std::vector<catalog::UserSequence>& sequences,
                         const templates::TemplateRegistry& registry,
                         Annotator& annotator, std::size_t concurrency) {
  bool need_preference = false;
  bool need_intention = false;
  for (const auto& scenario : config.scenarios) {
    for (const auto& tmpl : registry.select(scenario.aspects, scenario.strategy)) {
      const auto slots = tmpl.placeholders();
      if (std::find(slots.begin(), slots.end(), SlotName::ExplicitPreference) !=
          slots.end()) {
        need_preference = true;
      }
      if (std::find(slots.begin(), slots.end(), SlotName::VagueIntention) !=
          slots.end()) {
        need_intention = true;
      }
      if (tmpl.strategy == StrategyTag::CoT) need_preference = true;
      if (tmpl.strategy == StrategyTag::Relatedness) need_intention = true;
      if (tmpl.strategy == StrategyTag::TaskReversal &&
          reversal_answer(tmpl.template_id) == ReversalAnswer::ExplicitPreference) {
        need_preference = true;
      }
    }
  }

  struct Task {
    const catalog::UserSequence* seq;
    std::size_t prefix_len;  // preference prompt over this prefix
    std::optional<std::string> review;  // intention prompt over this review
  };
  std::vector<Task> tasks;
  for (const auto& seq : sequences) {
    const std::size_t n = seq.events.size();
    if (n < 3) continue;
    // Training target plus both held-out targets.
    for (const std::size_t target_idx : {n - 3, n - 2, n - 1}) {
      Task task{&seq, target_idx, std::nullopt};
      if (need_intention && seq.events[target_idx].review_text) {
        task.review = seq.events[target_idx].review_text;
      }
      if ((need_preference && task.prefix_len > 0) || task.review) {
        tasks.push_back(std::move(task));
      }
    }
  }

  AnnotateStats stats;
  stats.tasks = tasks.size();
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> failures{0};
  std::atomic<bool> stop{false};

  const auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size() || stop.load()) return;
      const auto& task = tasks[i];
      try {
        if (need_preference && task.prefix_len > 0) {
          catalog::UserSequence prefix;
          prefix.user_id = task.seq->user_id;
          prefix.events.assign(task.seq->events.begin(),
                               task.seq->events.begin() +
                                   static_cast<std::ptrdiff_t>(task.prefix_len));
          annotator.generate_explicit_preference(prefix, cat);
        }
        if (task.review) {
          annotator.extract_vague_intention(*task.review);
        }
      } catch (const BudgetExhaustedError&) {
        failures.fetch_add(1);
        stop.store(true);
        return;
      } catch (const std::exception&) {
        failures.fetch_add(1);
      }
    }
  };

  const std::size_t n_workers =
      std::max<std::size_t>(1, std::min(concurrency, tasks.size()));
  std::vector<std::thread> workers;
  workers.reserve(n_workers);
  for (std::size_t i = 0; i < n_workers; ++i) workers.emplace_back(worker);
  for (auto& w : workers) w.join();

  stats.failures = failures.load();
  stats.upstream_calls = annotator.upstream_calls();
  return stats;
}

// ---------------------------------------------------------------------------
// Audit sheets
// ---------------------------------------------------------------------------

const std::array<const char*, 4> kAuditQuestions{
    "Is the instruction generated from the user's related information?",
    "Does the teacher-LLM provide related world knowledge?",
    "Does the instruction reflect the user's preference/intention?",
    "Is the instruction related to target item?",
};

AuditSampleStats audit_sample(std::istream& corpus, std::size_t n_per_kind,
                              std::uint64_t seed, std::ostream& sheet) {
  std::vector<json> preference_rows;
  std::vector<json> intention_rows;
  for_each_jsonl(corpus, [&](json j, std::size_t) {
    if (j.contains("__marker__")) return;
    const InstructionInstance instance = instance_from_json(j);
    if (intention_describing(instance.rendered)) {
      intention_rows.push_back(std::move(j));
    } else {
      preference_rows.push_back(std::move(j));
    }
  });

  AuditSampleStats stats;
  const auto emit_kind = [&](std::vector<json>& rows, const char* kind,
                             std::size_t& taken) {
    Rng rng(Rng::derive(seed, std::string("audit|") + kind));
    rng.shuffle(rows);
    taken = std::min(n_per_kind, rows.size());
    if (rows.size() < n_per_kind) stats.short_of_quota = true;
    for (std::size_t i = 0; i < taken; ++i) {
      json questions = json::array();
      for (const auto* q : kAuditQuestions) {
        questions.push_back(json{{"question", q}, {"verdict", ""}});
      }
      write_jsonl(sheet, json{{"kind", kind},
                              {"user", rows[i].at("user")},
                              {"scenario", rows[i].at("scenario")},
                              {"template_id", rows[i].at("template_id")},
                              {"instruction", rows[i].at("instruction")},
                              {"output", rows[i].at("output")},
                              {"source", rows[i].at("provenance")},
                              {"questions", std::move(questions)}});
    }
  };
  emit_kind(preference_rows, "preference", stats.preference_rows);
  emit_kind(intention_rows, "intention", stats.intention_rows);
  return stats;
}

json AuditAggregate::to_json() const {
  json out = json::object();
  for (const auto& [kind, per_question] : counts) {
    json rows = json::array();
    for (std::size_t i = 0; i < per_question.size(); ++i) {
      const auto [yes, answered] = per_question[i];
      json row{{"question", kAuditQuestions[i]},
               {"yes", yes},
               {"answered", answered}};
      row["yes_rate"] =
          answered > 0 ? static_cast<double>(yes) / static_cast<double>(answered)
                       : 0.0;
      rows.push_back(std::move(row));
    }
    out[kind] = std::move(rows);
  }
  return out;
}

AuditAggregate aggregate_audit(std::istream& sheet) {
  AuditAggregate agg;
  for_each_jsonl(sheet, [&](json j, std::size_t line_no) {
    const std::string kind = j.value("kind", "");
    const auto& questions = j.at("questions");
    if (!questions.is_array() || questions.size() != kAuditQuestions.size()) {
      throw DataError("audit sheet line " + std::to_string(line_no) +
                      ": malformed questions array");
    }
    auto& per_question = agg.counts[kind];
    for (std::size_t i = 0; i < kAuditQuestions.size(); ++i) {
      const std::string verdict =
          to_lower_ascii(trim(questions[i].value("verdict", "")));
      if (verdict.empty()) continue;
      auto& [yes, answered] = per_question[i];
      ++answered;
      if (verdict == "yes" || verdict == "y") ++yes;
    }
  });
  return agg;
}

}  // namespace ricot::annotator
