#pragma once

// Contracts for every external model the harness consults: the textual world
// model, the visual realizer, the judge, the text embedder and the agent
// policy. Public entry points check preconditions and postconditions, then
// delegate to the implementation hooks, so no implementation can skip them.

#include <cmath>
#include <span>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "wmbench/a11y.hpp"
#include "wmbench/action.hpp"
#include "wmbench/error.hpp"
#include "wmbench/image.hpp"
#include "wmbench/json_text.hpp"
#include "wmbench/reward.hpp"

namespace wmbench {

using json = nlohmann::json;

enum class SearchMode { None, Text, Image, ImageText };

inline std::string_view to_string(SearchMode m) {
  switch (m) {
    case SearchMode::None: return "none";
    case SearchMode::Text: return "text";
    case SearchMode::Image: return "image";
    case SearchMode::ImageText: return "image_text";
  }
  return "none";
}

inline SearchMode parse_search_mode(std::string_view s) {
  if (s == "none") return SearchMode::None;
  if (s == "text") return SearchMode::Text;
  if (s == "image") return SearchMode::Image;
  if (s == "image_text" || s == "image+text") return SearchMode::ImageText;
  fail(Errc::ConfigError, "unknown search mode '" + std::string(s) + "'");
}

inline bool mode_uses_text(SearchMode m) { return m == SearchMode::Text || m == SearchMode::ImageText; }
inline bool mode_uses_image(SearchMode m) { return m == SearchMode::Image || m == SearchMode::ImageText; }

struct SamplingParams {
  std::optional<double> temperature;
  std::optional<double> top_p;
  friend bool operator==(const SamplingParams&, const SamplingParams&) = default;
};

struct TransitionRequest {
  std::string record_id;
  int sample_index = 0;  ///< Distinguishes repeated draws for one input.
  ImageRef screenshot;
  ActionCall action;
  std::string app_name;
  std::optional<std::string> gui_description;
  std::string template_id = "textual_transition";
  SamplingParams sampling;
};

struct RealizationRequest {
  std::string record_id;
  ImageRef screenshot;
  std::string transition_text;
  /// Ground-truth next frame. Only oracle fixtures look at it.
  std::optional<ImageRef> reference_next;
};

struct AgentProposeRequest {
  std::string record_id;
  std::string instruction;
  ImageRef screenshot;
  std::optional<ImageRef> annotated;
  std::vector<A11yElement> a11y;
  std::string app_name;
  std::string supported_actions{kDefaultSupportedActions};
  int num_options = 5;
};

/// One option as shown to the selector; which fields are filled depends on
/// the search mode.
struct PresentedOption {
  int index = 1;  ///< 1-based position.
  CandidateOption candidate;
  std::optional<std::string> predicted_text;
  std::optional<ImageRef> predicted_image;
};

struct AgentSelectRequest {
  std::string record_id;
  std::string instruction;
  ImageRef screenshot;
  SearchMode mode = SearchMode::None;
  std::vector<PresentedOption> options;
};

struct Selection {
  int action_idx = 0;
  std::string thought;
  friend bool operator==(const Selection&, const Selection&) = default;
};

/// Single next-action query used by the consistency protocol. `screenshot`
/// is absent in the text-only condition.
struct AgentActRequest {
  std::string record_id;
  std::string condition;  ///< "gt" or "wm"
  std::string instruction;
  std::optional<ImageRef> screenshot;
  std::string description;
  std::vector<A11yElement> a11y;
  std::string app_name;
};

struct ActOutcome {
  std::optional<ActionCall> action;  ///< Absent when the output was not a valid action.
  std::string raw;
};

struct ProposalResult {
  std::vector<CandidateOption> candidates;
  std::vector<std::string> warnings;
};

using Embedding = std::vector<double>;

// ---------------------------------------------------------------------------

/// Retries spent by the most recent provider call on this thread; transport
/// layers set it, transcript recorders read it.
inline thread_local int last_call_retries = 0;

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(Errc::PreconditionViolation, what);
}

class Provider {
 public:
  virtual ~Provider() = default;
  /// Stable identity recorded in transcripts and reports.
  virtual std::string identity() const = 0;
};

class TextualWorldModel : public Provider {
 public:
  std::string predict_transition(const TransitionRequest& req) {
    require(!req.screenshot.path.empty(), "transition request has no screenshot");
    require(!req.app_name.empty(), "transition request leaves {app_name} unbound");
    require(req.gui_description && !req.gui_description->empty(), "transition request leaves {gui_description} unbound");
    std::string out = do_predict_transition(req);
    if (trim_ascii(out).empty()) fail(Errc::ProviderRefusal, "world model returned an empty transition");
    return out;
  }

 protected:
  virtual std::string do_predict_transition(const TransitionRequest& req) = 0;
};

class VisualRealizer : public Provider {
 public:
  ImageRef realize_state(const RealizationRequest& req) {
    require(!req.screenshot.path.empty(), "realization request has no screenshot");
    require(!trim_ascii(req.transition_text).empty(), "realization request has an empty transition text");
    return do_realize_state(req);
  }

 protected:
  virtual ImageRef do_realize_state(const RealizationRequest& req) = 0;
};

class JudgeProvider : public Provider {
 public:
  JudgeVerdict judge_transition(const std::string& pred, const std::string& gt) {
    require(!trim_ascii(pred).empty(), "judge needs a non-empty prediction");
    require(!trim_ascii(gt).empty(), "judge needs a non-empty reference");
    JudgeVerdict v = do_judge(pred, gt);
    validate_verdict(v);
    return v;
  }

 protected:
  virtual JudgeVerdict do_judge(const std::string& pred, const std::string& gt) = 0;
};

class Embedder : public Provider {
 public:
  std::vector<Embedding> embed_texts(const std::vector<std::string>& texts) {
    for (const auto& t : texts) require(!t.empty(), "cannot embed an empty string");
    if (texts.empty()) return {};
    auto out = do_embed(texts);
    if (out.size() != texts.size()) {
      fail(Errc::DimensionInconsistency, "embedder returned " + std::to_string(out.size()) + " vectors for " +
                                             std::to_string(texts.size()) + " texts");
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (out[i].size() != out.front().size() || out[i].empty()) {
        fail(Errc::DimensionInconsistency, "embedding dimensions are inconsistent within one response");
      }
      double n2 = 0.0;
      for (double v : out[i]) n2 += v * v;
      if (!(n2 > 0.0) || !std::isfinite(n2)) fail(Errc::EmbedderFailure, "zero or non-finite embedding for '" + texts[i] + "'");
      const double inv = 1.0 / std::sqrt(n2);
      for (double& v : out[i]) v *= inv;
    }
    return out;
  }

 protected:
  virtual std::vector<Embedding> do_embed(const std::vector<std::string>& texts) = 0;
};

class AgentPolicy : public Provider {
 public:
  ProposalResult propose_actions(const AgentProposeRequest& req) {
    require(req.num_options >= 1, "num_options must be at least 1");
    require(!req.screenshot.path.empty(), "proposal request has no screenshot");
    ProposalResult r = do_propose(req);
    if (r.candidates.empty()) fail(Errc::EmptyArray, "agent proposed no candidates");
    if (static_cast<int>(r.candidates.size()) < req.num_options && r.warnings.empty()) {
      r.warnings.push_back("agent proposed " + std::to_string(r.candidates.size()) + " of " +
                           std::to_string(req.num_options) + " requested options");
    }
    return r;
  }

  Selection select_action(const AgentSelectRequest& req) {
    require(!req.options.empty(), "selection needs at least one option");
    for (std::size_t i = 0; i < req.options.size(); ++i) {
      require(req.options[i].index == static_cast<int>(i) + 1, "options must be indexed 1..N in order");
    }
    Selection s = do_select(req);
    if (s.action_idx < 1 || s.action_idx > static_cast<int>(req.options.size())) {
      fail(Errc::InvalidSelection, "action_idx " + std::to_string(s.action_idx) + " outside 1.." +
                                       std::to_string(req.options.size()));
    }
    return s;
  }

  ActOutcome next_action(const AgentActRequest& req) { return do_act(req); }

 protected:
  virtual ProposalResult do_propose(const AgentProposeRequest& req) = 0;
  virtual Selection do_select(const AgentSelectRequest& req) = 0;
  virtual ActOutcome do_act(const AgentActRequest& req) = 0;
};

// ---------------------------------------------------------------------------
// JSON codecs (transcripts, fixtures).

inline json image_ref_to_json(const ImageRef& r) { return {{"path", r.path}, {"width", r.width}, {"height", r.height}}; }

inline ImageRef image_ref_from_json(const json& j) {
  if (j.is_string()) return ImageRef{j.get<std::string>(), 0, 0};
  return ImageRef{j.at("path").get<std::string>(), j.value("width", 0), j.value("height", 0)};
}

inline json opt_image_to_json(const std::optional<ImageRef>& r) { return r ? image_ref_to_json(*r) : json(nullptr); }

inline std::optional<ImageRef> opt_image_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  return image_ref_from_json(j);
}

inline json a11y_list_to_json(std::span<const A11yElement> v) {
  json out = json::array();
  for (const auto& e : v) out.push_back(a11y_to_json(e));
  return out;
}

inline std::vector<A11yElement> a11y_list_from_json(const json& j) {
  std::vector<A11yElement> out;
  if (j.is_null()) return out;
  for (const auto& e : j) out.push_back(a11y_from_json(e));
  return out;
}

// Actions keep their own key order, so they travel as serialized text.
inline json action_field(const ActionCall& a) { return serialize_action(a); }
inline ActionCall action_field_from(const json& j) { return parse_action(j.get<std::string>()); }

inline json to_json(const TransitionRequest& r) {
  json j{{"record_id", r.record_id},
         {"sample_index", r.sample_index},
         {"screenshot", image_ref_to_json(r.screenshot)},
         {"action", action_field(r.action)},
         {"app_name", r.app_name},
         {"gui_description", r.gui_description ? json(*r.gui_description) : json(nullptr)},
         {"template_id", r.template_id}};
  j["temperature"] = r.sampling.temperature ? json(*r.sampling.temperature) : json(nullptr);
  j["top_p"] = r.sampling.top_p ? json(*r.sampling.top_p) : json(nullptr);
  return j;
}

inline json to_json(const RealizationRequest& r) {
  return {{"record_id", r.record_id},
          {"screenshot", image_ref_to_json(r.screenshot)},
          {"transition_text", r.transition_text},
          {"reference_next", opt_image_to_json(r.reference_next)}};
}

inline json to_json(const AgentProposeRequest& r) {
  return {{"record_id", r.record_id},         {"instruction", r.instruction},
          {"screenshot", image_ref_to_json(r.screenshot)}, {"annotated", opt_image_to_json(r.annotated)},
          {"a11y", a11y_list_to_json(r.a11y)}, {"app_name", r.app_name},
          {"supported_actions", r.supported_actions}, {"num_options", r.num_options}};
}

inline json to_json(const PresentedOption& o) {
  return {{"index", o.index},
          {"thoughts", o.candidate.thoughts},
          {"action", action_field(o.candidate.tool_call)},
          {"predicted_text", o.predicted_text ? json(*o.predicted_text) : json(nullptr)},
          {"predicted_image", opt_image_to_json(o.predicted_image)}};
}

inline json to_json(const AgentSelectRequest& r) {
  json opts = json::array();
  for (const auto& o : r.options) opts.push_back(to_json(o));
  return {{"record_id", r.record_id},
          {"instruction", r.instruction},
          {"screenshot", image_ref_to_json(r.screenshot)},
          {"mode", std::string(to_string(r.mode))},
          {"options", opts}};
}

inline json to_json(const AgentActRequest& r) {
  return {{"record_id", r.record_id},       {"condition", r.condition},
          {"instruction", r.instruction},   {"screenshot", opt_image_to_json(r.screenshot)},
          {"description", r.description},   {"a11y", a11y_list_to_json(r.a11y)},
          {"app_name", r.app_name}};
}

inline json to_json(const Selection& s) { return {{"action_idx", s.action_idx}, {"thought", s.thought}}; }
inline Selection selection_from_json(const json& j) {
  return Selection{j.at("action_idx").get<int>(), j.value("thought", std::string())};
}

inline json to_json(const ActOutcome& o) {
  return {{"action", o.action ? json(serialize_action(*o.action)) : json(nullptr)}, {"raw", o.raw}};
}
inline ActOutcome act_outcome_from_json(const json& j) {
  ActOutcome o;
  o.raw = j.value("raw", std::string());
  if (!j.at("action").is_null()) o.action = action_field_from(j.at("action"));
  return o;
}

inline json to_json(const ProposalResult& r) {
  json c = json::array();
  for (const auto& o : r.candidates) c.push_back({{"thoughts", o.thoughts}, {"tool_call", action_field(o.tool_call)}});
  return {{"candidates", c}, {"warnings", r.warnings}};
}
inline ProposalResult proposal_from_json(const json& j) {
  ProposalResult r;
  for (const auto& c : j.at("candidates")) {
    r.candidates.push_back(CandidateOption{c.at("thoughts").get<std::string>(), action_field_from(c.at("tool_call"))});
  }
  r.warnings = j.value("warnings", std::vector<std::string>{});
  return r;
}

inline JudgeVerdict verdict_from_plain_json(const json& j) {
  return verdict_from_json(nlohmann::ordered_json::parse(j.dump()));
}

// ---------------------------------------------------------------------------
// Output parsing shared by every implementation that talks to a language
// model. Both re-ask exactly once.

/// First JSON object in the reply (fence or surrounding prose tolerated).
inline Selection parse_selection(std::string_view text) {
  auto doc = first_json_value(strip_code_fence(text), '{');
  if (!doc) fail(Errc::MalformedDocument, "selection reply holds no JSON object");
  auto idx = doc->find("action_idx");
  if (idx == doc->end() || !idx->is_number_integer()) fail(Errc::InvalidSelection, "selection reply lacks an integer action_idx");
  Selection s;
  s.action_idx = idx->get<int>();
  if (auto t = doc->find("thought"); t != doc->end() && t->is_string()) s.thought = t->get<std::string>();
  return s;
}

template <typename Ask>
Selection select_with_reask(Ask&& ask, std::size_t n_options) {
  std::string last_error;
  for (int attempt = 0; attempt < 2; ++attempt) {
    try {
      Selection s = parse_selection(ask(attempt));
      if (s.action_idx >= 1 && s.action_idx <= static_cast<int>(n_options)) return s;
      last_error = "action_idx " + std::to_string(s.action_idx) + " outside 1.." + std::to_string(n_options);
    } catch (const Error& e) {
      if (e.code() != Errc::MalformedDocument && e.code() != Errc::InvalidSelection) throw;
      last_error = e.detail();
    }
  }
  fail(Errc::InvalidSelection, "after re-ask: " + last_error);
}

template <typename Ask>
JudgeVerdict judge_with_reask(Ask&& ask) {
  std::string last_error;
  for (int attempt = 0; attempt < 2; ++attempt) {
    try {
      return parse_verdict(ask(attempt));
    } catch (const Error& e) {
      if (e.code() != Errc::MalformedDocument && e.code() != Errc::InvalidVerdict) throw;
      last_error = e.detail();
    }
  }
  fail(Errc::InvalidVerdict, "after re-ask: " + last_error);
}

}  // namespace wmbench
