#pragma once

// Deterministic providers driven entirely by fixtures. Each is a pure function
// of its fixture data and the request, so two runs always agree.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "wmbench/a11y.hpp"
#include "wmbench/action.hpp"
#include "wmbench/digest.hpp"
#include "wmbench/error.hpp"
#include "wmbench/image.hpp"
#include "wmbench/providers/contracts.hpp"
#include "wmbench/reward.hpp"
#include "wmbench/unicode.hpp"

namespace wmbench {

inline json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::ConfigError, "cannot open " + path.string());
  auto j = json::parse(in, nullptr, false);
  if (j.is_discarded()) fail(Errc::ConfigError, path.string() + " is not valid JSON");
  return j;
}

/// ASCII-insensitive substring test.
inline bool contains_folded(std::string_view haystack, std::string_view needle) {
  if (needle.empty()) return false;
  auto fold = [](char c) { return static_cast<char>(c >= 'A' && c <= 'Z' ? c - 'A' + 'a' : c); };
  auto it = std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end(),
                        [&](char a, char b) { return fold(a) == fold(b); });
  return it != haystack.end();
}

// ---------------------------------------------------------------------------

/// Fixture table: {"transitions": [{"record_id", "action"?, "text"}]}. An entry
/// with an action matches only that action; one without matches any action
/// for the record. Unlisted requests get a description built from the
/// request itself.
class MockTextualWorldModel final : public TextualWorldModel {
 public:
  MockTextualWorldModel() = default;
  explicit MockTextualWorldModel(const json& fixtures) {
    for (const auto& t : fixtures.value("transitions", json::array())) {
      const auto id = t.at("record_id").get<std::string>();
      const auto text = t.at("text").get<std::string>();
      if (t.contains("action") && !t.at("action").is_null()) {
        const auto& a = t.at("action");
        by_action_[{id, serialize_action(a.is_string() ? parse_action(a.get<std::string>())
                                                       : action_from_json(nlohmann::ordered_json::parse(a.dump())))}] = text;
      } else {
        by_record_[id] = text;
      }
    }
  }

  std::string identity() const override { return "mock:textual_wm"; }

 protected:
  std::string do_predict_transition(const TransitionRequest& req) override {
    if (auto it = by_action_.find({req.record_id, serialize_action(req.action)}); it != by_action_.end()) return it->second;
    if (auto it = by_record_.find(req.record_id); it != by_record_.end()) return it->second;
    return "This is " + req.app_name + ". The user action is: " + *req.gui_description +
           ". The Main Editing Area reflects the result of this action; Title Bar, Ribbon and Status Bar unchanged.";
  }

 private:
  std::map<std::pair<std::string, std::string>, std::string> by_action_;
  std::unordered_map<std::string, std::string> by_record_;
};

// ---------------------------------------------------------------------------

enum class RealizerMode { Oracle, Identity, Stamped };

inline RealizerMode parse_realizer_mode(std::string_view s) {
  if (s == "oracle") return RealizerMode::Oracle;
  if (s == "identity") return RealizerMode::Identity;
  if (s == "stamped") return RealizerMode::Stamped;
  fail(Errc::ConfigError, "unknown realizer mode '" + std::string(s) + "'");
}

/// oracle: the ground-truth next frame; identity: the current frame;
/// stamped: the current frame with the transition text hidden in it.
class MockVisualRealizer final : public VisualRealizer {
 public:
  explicit MockVisualRealizer(RealizerMode mode, std::filesystem::path out_dir = {})
      : mode_(mode), out_dir_(std::move(out_dir)) {}

  std::string identity() const override {
    switch (mode_) {
      case RealizerMode::Oracle: return "mock:visual_wm/oracle";
      case RealizerMode::Identity: return "mock:visual_wm/identity";
      case RealizerMode::Stamped: return "mock:visual_wm/stamped";
    }
    return "mock:visual_wm";
  }

 protected:
  ImageRef do_realize_state(const RealizationRequest& req) override {
    switch (mode_) {
      case RealizerMode::Oracle:
        require(req.reference_next.has_value(), "oracle realizer needs the reference next frame");
        return *req.reference_next;
      case RealizerMode::Identity:
        return req.screenshot;
      case RealizerMode::Stamped: break;
    }
    require(!out_dir_.empty(), "stamped realizer needs an output directory");
    const Image base = load_image(req.screenshot.path);
    const auto path = out_dir_ / (req.record_id + "_" + sha256_hex(req.transition_text).substr(0, 16) + ".png");
    std::lock_guard lock(mu_);
    std::filesystem::create_directories(out_dir_);
    const Image stamped = stamp_caption(base, req.transition_text);
    if (!std::filesystem::exists(path)) save_png(stamped, path);
    return make_ref(path, stamped);
  }

 private:
  RealizerMode mode_;
  std::filesystem::path out_dir_;
  std::mutex mu_;
};

// ---------------------------------------------------------------------------

/// Lowercased ASCII word set, used by the fallback judge.
inline std::set<std::string> word_set(std::string_view text) {
  std::set<std::string> out;
  std::string cur;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!cur.empty()) {
      out.insert(std::exchange(cur, {}));
    }
  }
  if (!cur.empty()) out.insert(cur);
  return out;
}

/// Fixture pairs {"pairs": [{"pred", "gt", "verdict" | "raw": [replies]}]}.
/// Without a fixture: identical texts score 1 everywhere; otherwise every
/// aspect gets the same score from word-set overlap (>= 0.8 -> 1,
/// >= 0.4 -> 0.5, else 0).
class MockJudge final : public JudgeProvider {
 public:
  MockJudge() = default;
  explicit MockJudge(const json& fixtures) {
    for (const auto& p : fixtures.value("pairs", json::array())) {
      Entry e;
      if (p.contains("verdict")) e.verdict = verdict_from_plain_json(p.at("verdict"));
      if (p.contains("raw")) e.raw = p.at("raw").get<std::vector<std::string>>();
      pairs_[{p.at("pred").get<std::string>(), p.at("gt").get<std::string>()}] = std::move(e);
    }
  }

  std::string identity() const override { return "mock:judge"; }

 protected:
  JudgeVerdict do_judge(const std::string& pred, const std::string& gt) override {
    if (auto it = pairs_.find({pred, gt}); it != pairs_.end()) {
      if (it->second.verdict) return *it->second.verdict;
      const auto& raw = it->second.raw;
      return judge_with_reask([&](int attempt) {
        return raw.empty() ? std::string() : raw[std::min<std::size_t>(static_cast<std::size_t>(attempt), raw.size() - 1)];
      });
    }
    if (pred == gt) return uniform_verdict(1.0, "identical to reference");
    const auto a = word_set(pred), b = word_set(gt);
    std::size_t inter = 0;
    for (const auto& w : a) inter += b.count(w);
    const std::size_t uni = a.size() + b.size() - inter;
    const double jac = uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
    return uniform_verdict(jac >= 0.8 ? 1.0 : jac >= 0.4 ? 0.5 : 0.0, "word overlap");
  }

 private:
  struct Entry {
    std::optional<JudgeVerdict> verdict;
    std::vector<std::string> raw;
  };
  std::map<std::pair<std::string, std::string>, Entry> pairs_;
};

// ---------------------------------------------------------------------------

/// One-hot embeddings over a fixed vocabulary: equal strings map to the same
/// unit vector, distinct strings to orthogonal ones.
class MockEmbedder final : public Embedder {
 public:
  explicit MockEmbedder(std::vector<std::string> vocabulary) {
    for (auto& w : vocabulary) index_.emplace(std::move(w), index_.size());
  }

  std::size_t dimension() const { return index_.size(); }
  std::string identity() const override { return "mock:embedder/one_hot"; }

 protected:
  std::vector<Embedding> do_embed(const std::vector<std::string>& texts) override {
    std::vector<Embedding> out;
    out.reserve(texts.size());
    for (const auto& t : texts) {
      auto it = index_.find(t);
      if (it == index_.end()) fail(Errc::EmbedderFailure, "string outside the mock vocabulary: '" + t + "'");
      Embedding v(index_.size(), 0.0);
      v[it->second] = 1.0;
      out.push_back(std::move(v));
    }
    return out;
  }

 private:
  std::unordered_map<std::string, std::size_t> index_;
};

// ---------------------------------------------------------------------------

/// Scripted agent. Script layout:
///   {"records": {"<id>": {"candidates": [...] | "candidates_raw": "...",
///                         "goal_keywords": [...], "fallback_index": k,
///                         "selection_raw": ["..."],
///                         "act": {"gt": action | {"raw": "..."}, "wm": ...}}},
///    "act_rules": [{"contains": "...", "action": {...}}],
///    "default_act": action | {"raw": "..."},
///    "default_fallback_index": 1}
///
/// Selection picks the first option whose visible text holds a goal keyword.
/// Visible text is the option's thoughts and action, plus the predicted
/// transition in text modes and the caption read back from the predicted
/// image in image modes.
class MockAgent final : public AgentPolicy {
 public:
  explicit MockAgent(json script) : script_(std::move(script)) {}

  std::string identity() const override { return "mock:agent"; }

 protected:
  ProposalResult do_propose(const AgentProposeRequest& req) override {
    const json& rec = record(req.record_id);
    ProposalResult r;
    if (rec.contains("candidates_raw")) {
      r.candidates = parse_candidate_array(rec.at("candidates_raw").get<std::string>());
    } else {
      for (const auto& c : rec.value("candidates", json::array())) {
        r.candidates.push_back(candidate_from_json(nlohmann::ordered_json::parse(c.dump()), r.candidates.size()));
      }
    }
    if (static_cast<int>(r.candidates.size()) > req.num_options) r.candidates.resize(static_cast<std::size_t>(req.num_options));
    return r;
  }

  Selection do_select(const AgentSelectRequest& req) override {
    const json& rec = record(req.record_id);
    if (rec.contains("selection_raw")) {
      const auto raw = rec.at("selection_raw").get<std::vector<std::string>>();
      return select_with_reask(
          [&](int attempt) { return raw[std::min<std::size_t>(static_cast<std::size_t>(attempt), raw.size() - 1)]; },
          req.options.size());
    }
    const auto keywords = rec.value("goal_keywords", std::vector<std::string>{});
    for (const auto& o : req.options) {
      const std::string visible = visible_text(o, req.mode);
      for (const auto& k : keywords) {
        if (contains_folded(visible, k)) return Selection{o.index, "option " + std::to_string(o.index) + " mentions '" + k + "'"};
      }
    }
    const int fallback = rec.value("fallback_index", script_.value("default_fallback_index", 1));
    return Selection{std::clamp(fallback, 1, static_cast<int>(req.options.size())), "no option mentions a goal keyword"};
  }

  ActOutcome do_act(const AgentActRequest& req) override {
    const json& rec = record(req.record_id);
    if (rec.contains("act") && rec.at("act").contains(req.condition)) return outcome_from(rec.at("act").at(req.condition));
    for (const auto& rule : script_.value("act_rules", json::array())) {
      const auto needle = rule.at("contains").get<std::string>();
      if (rule.value("requires_image", false) && !req.screenshot) continue;
      if (contains_folded(req.description, needle)) return outcome_from(rule.at("action"));
    }
    if (script_.contains("default_act")) return outcome_from(script_.at("default_act"));
    return ActOutcome{std::nullopt, "no applicable action"};
  }

 private:
  const json& record(const std::string& id) const {
    static const json kEmpty = json::object();
    const auto& records = script_.contains("records") ? script_.at("records") : kEmpty;
    auto it = records.find(id);
    return it == records.end() ? kEmpty : *it;
  }

  static std::string visible_text(const PresentedOption& o, SearchMode mode) {
    std::string v = o.candidate.thoughts + "\n" + serialize_action(o.candidate.tool_call);
    if (mode_uses_text(mode) && o.predicted_text) v += "\n" + *o.predicted_text;
    if (mode_uses_image(mode) && o.predicted_image) {
      if (auto cap = read_caption(load_image(o.predicted_image->path))) v += "\n" + *cap;
    }
    return v;
  }

  static ActOutcome outcome_from(const json& j) {
    if (j.is_object() && j.contains("raw")) {
      const auto raw = j.at("raw").get<std::string>();
      try {
        return ActOutcome{parse_action(raw), raw};
      } catch (const Error&) {
        return ActOutcome{std::nullopt, raw};
      }
    }
    const std::string raw = j.dump();
    return ActOutcome{parse_action(raw), raw};
  }

  json script_;
};

}  // namespace wmbench
