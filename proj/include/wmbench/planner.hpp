#pragma once

// Evaluation protocols: world-model-guided action search over proposed
// candidates, the two-condition action consistency protocol, and the task
// score aggregate.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wmbench/a11y.hpp"
#include "wmbench/action.hpp"
#include "wmbench/consistency.hpp"
#include "wmbench/dataset.hpp"
#include "wmbench/error.hpp"
#include "wmbench/parallel.hpp"
#include "wmbench/providers/factory.hpp"

namespace wmbench {

struct SimulatedOutcome {
  CandidateOption candidate;
  std::optional<std::string> predicted_text;
  std::optional<ImageRef> predicted_image;
};

struct SearchOutcome {
  std::string record_id;
  SearchMode mode = SearchMode::None;
  std::vector<SimulatedOutcome> candidates;
  std::optional<int> selected_idx;  ///< 1-based; absent after a selection failure.
  std::optional<ActionCall> selected_action;
  ActionCall gt_action;
  MatchBreakdown breakdown;
  bool gt_in_candidates = false;
  std::vector<std::string> warnings;
  std::optional<std::string> selection_error;
};

struct SearchOptions {
  SearchMode mode = SearchMode::None;
  int num_options = 5;
  /// Concurrent candidate simulations within one record.
  int simulation_jobs = 1;
};

inline void check_search_providers(const ProviderSet& p, SearchMode mode) {
  if (!p.agent) fail(Errc::ConfigError, "action search needs an agent provider");
  if (mode != SearchMode::None && !p.textual_wm) fail(Errc::ConfigError, "mode " + std::string(to_string(mode)) + " needs textual_wm");
  if (mode_uses_image(mode) && !p.visual_wm) fail(Errc::ConfigError, "mode " + std::string(to_string(mode)) + " needs visual_wm");
}

inline SearchOutcome run_action_search(const TransitionRecord& record, const ProviderSet& providers, const SearchOptions& opts = {}) {
  check_search_providers(providers, opts.mode);
  SearchOutcome out;
  out.record_id = record.record_id;
  out.mode = opts.mode;
  out.gt_action = record.action;
  const std::string app = app_display_name(record.app);

  AgentProposeRequest propose{record.record_id, record.instruction, record.screenshot_before, record.annotated,
                              record.a11y,      app,                std::string(kDefaultSupportedActions), opts.num_options};
  ProposalResult proposal = providers.agent->propose_actions(propose);
  out.warnings = std::move(proposal.warnings);
  out.candidates.resize(proposal.candidates.size());
  for (std::size_t i = 0; i < proposal.candidates.size(); ++i) out.candidates[i].candidate = proposal.candidates[i];

  // Simulations may run concurrently; results stay in proposal order.
  if (opts.mode != SearchMode::None) {
    parallel_for(out.candidates.size(), opts.simulation_jobs, [&](std::size_t i) {
      auto& sim = out.candidates[i];
      TransitionRequest treq;
      treq.record_id = record.record_id;
      treq.sample_index = static_cast<int>(i);
      treq.screenshot = record.screenshot_before;
      treq.action = sim.candidate.tool_call;
      treq.app_name = app;
      treq.gui_description = describe_action(sim.candidate.tool_call);
      sim.predicted_text = providers.textual_wm->predict_transition(treq);
      if (mode_uses_image(opts.mode)) {
        sim.predicted_image = providers.visual_wm->realize_state(
            RealizationRequest{record.record_id, record.screenshot_before, *sim.predicted_text, record.screenshot_after});
      }
    });
  }

  AgentSelectRequest sel{record.record_id, record.instruction, record.screenshot_before, opts.mode, {}};
  for (std::size_t i = 0; i < out.candidates.size(); ++i) {
    const auto& sim = out.candidates[i];
    PresentedOption o;
    o.index = static_cast<int>(i) + 1;
    o.candidate = sim.candidate;
    if (mode_uses_text(opts.mode)) o.predicted_text = sim.predicted_text;
    if (mode_uses_image(opts.mode)) o.predicted_image = sim.predicted_image;
    sel.options.push_back(std::move(o));
  }

  const TargetGeometry geometry = geometry_for(record.action, record.a11y);
  try {
    const Selection s = providers.agent->select_action(sel);
    out.selected_idx = s.action_idx;
    out.selected_action = out.candidates[static_cast<std::size_t>(s.action_idx - 1)].candidate.tool_call;
    out.breakdown = match_actions(*out.selected_action, record.action, geometry);
  } catch (const Error& e) {
    if (e.code() != Errc::InvalidSelection) throw;
    // Counted as a miss, never dropped from the denominator.
    out.selection_error = std::string(to_string(Errc::SelectionFailure)) + ": " + e.detail();
    out.breakdown = MatchBreakdown{};
  }

  for (const auto& sim : out.candidates) {
    if (match_actions(sim.candidate.tool_call, record.action, geometry).overall_match) {
      out.gt_in_candidates = true;
      break;
    }
  }
  return out;
}

struct AcsOutcome {
  std::string record_id;
  std::optional<ActionCall> a_gt;
  std::optional<ActionCall> a_wm;
  std::string raw_gt;
  std::string raw_wm;
  std::string wm_text;
  MatchBreakdown breakdown;
};

/// Queries the agent with the screenshot and reference description, then
/// with the world model's description only; the first answer is the oracle.
inline AcsOutcome run_acs_protocol(const TransitionRecord& record, const std::string& wm_text, AgentPolicy& agent) {
  AcsOutcome out;
  out.record_id = record.record_id;
  out.wm_text = wm_text;
  const std::string app = app_display_name(record.app);
  const ActOutcome gt = agent.next_action(
      AgentActRequest{record.record_id, "gt", record.instruction, record.screenshot_before, record.gt_transition_text, record.a11y, app});
  const ActOutcome wm =
      agent.next_action(AgentActRequest{record.record_id, "wm", record.instruction, std::nullopt, wm_text, record.a11y, app});
  out.a_gt = gt.action;
  out.a_wm = wm.action;
  out.raw_gt = gt.raw;
  out.raw_wm = wm.raw;
  TargetGeometry geometry;
  if (out.a_gt) geometry = geometry_for(*out.a_gt, record.a11y);
  out.breakdown = score_pair(ActionPair{out.a_wm, out.a_gt, geometry});
  return out;
}

struct TaskScore {
  double score = 0.0;
  std::size_t matched = 0;
  std::size_t denominator = 0;
  std::size_t excluded = 0;
};

inline TaskScore aggregate_task_score(std::span<const SearchOutcome> outcomes, bool exclude_no_gt) {
  if (outcomes.empty()) fail(Errc::EmptyDataset, "no search outcomes to aggregate");
  TaskScore t;
  for (const auto& o : outcomes) {
    if (exclude_no_gt && !o.gt_in_candidates) {
      ++t.excluded;
      continue;
    }
    ++t.denominator;
    t.matched += o.breakdown.overall_match ? 1 : 0;
  }
  if (t.denominator == 0) fail(Errc::EmptyAfterExclusion, "every outcome lacks the ground-truth action among its candidates");
  t.score = static_cast<double>(t.matched) / static_cast<double>(t.denominator);
  return t;
}

/// Runs every record; record order is preserved regardless of `jobs`.
inline std::vector<SearchOutcome> run_search_batch(std::span<const TransitionRecord> records, const ProviderSet& providers,
                                                   const SearchOptions& opts, int jobs) {
  check_search_providers(providers, opts.mode);
  std::vector<SearchOutcome> out(records.size());
  parallel_for(records.size(), jobs, [&](std::size_t i) { out[i] = run_action_search(records[i], providers, opts); });
  return out;
}

inline json search_outcome_to_json(const SearchOutcome& o) {
  json cands = json::array();
  for (const auto& c : o.candidates) {
    cands.push_back({{"thoughts", c.candidate.thoughts},
                     {"tool_call", json::parse(serialize_action(c.candidate.tool_call))},
                     {"predicted_text", c.predicted_text ? json(*c.predicted_text) : json(nullptr)},
                     {"predicted_image", c.predicted_image ? json(c.predicted_image->path) : json(nullptr)}});
  }
  return {{"record_id", o.record_id},
          {"mode", std::string(to_string(o.mode))},
          {"candidates", cands},
          {"selected_idx", o.selected_idx ? json(*o.selected_idx) : json(nullptr)},
          {"selected_action", o.selected_action ? json::parse(serialize_action(*o.selected_action)) : json(nullptr)},
          {"gt_action", json::parse(serialize_action(o.gt_action))},
          {"func", o.breakdown.func_match},
          {"status", o.breakdown.status_match},
          {"args", o.breakdown.args_match},
          {"overall", o.breakdown.overall_match},
          {"instance_score", o.breakdown.instance_score},
          {"gt_in_candidates", o.gt_in_candidates},
          {"warnings", o.warnings},
          {"selection_error", o.selection_error ? json(*o.selection_error) : json(nullptr)}};
}

}  // namespace wmbench
