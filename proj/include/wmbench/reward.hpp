#pragma once

// Judge aggregation, soft length penalty, composite reward and
// group-relative advantages for sampled transition descriptions.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "wmbench/error.hpp"
#include "wmbench/json_text.hpp"
#include "wmbench/unicode.hpp"

namespace wmbench {

inline constexpr std::array<std::string_view, 8> kJudgeAspects{
    "app_name", "user_action",     "title_bar",      "ribbon",
    "main_editing_area", "sidebar_pane", "navigation_area", "status_bar",
};

/// Per-aspect scores in {0, 0.5, 1} over exactly the eight aspects, plus the
/// judge's rationales.
struct JudgeVerdict {
  std::map<std::string, double> scores;
  std::map<std::string, std::string> notes;

  friend bool operator==(const JudgeVerdict&, const JudgeVerdict&) = default;
};

inline bool is_allowed_score(double v) { return v == 0.0 || v == 0.5 || v == 1.0; }

inline void validate_verdict(const JudgeVerdict& v) {
  for (auto aspect : kJudgeAspects) {
    auto it = v.scores.find(std::string(aspect));
    if (it == v.scores.end()) fail(Errc::InvalidVerdict, "missing aspect '" + std::string(aspect) + "'");
    if (!is_allowed_score(it->second)) {
      fail(Errc::InvalidVerdict, "aspect '" + std::string(aspect) + "' has score " + std::to_string(it->second) +
                                     ", expected one of 0, 0.5, 1");
    }
  }
  if (v.scores.size() != kJudgeAspects.size()) fail(Errc::InvalidVerdict, "unexpected aspect in scores");
}

inline JudgeVerdict uniform_verdict(double score, std::string_view note = "") {
  JudgeVerdict v;
  for (auto a : kJudgeAspects) {
    v.scores[std::string(a)] = score;
    if (!note.empty()) v.notes[std::string(a)] = std::string(note);
  }
  return v;
}

inline nlohmann::json verdict_to_json(const JudgeVerdict& v) {
  nlohmann::json scores = nlohmann::json::object();
  for (const auto& [k, s] : v.scores) scores[k] = s;
  nlohmann::json notes = nlohmann::json::object();
  for (const auto& [k, n] : v.notes) notes[k] = n;
  return {{"scores", scores}, {"notes", notes}};
}

/// Strict verdict decoding from an already-parsed object. Score keys outside
/// the eight weighted aspects are ignored; values are never coerced.
inline JudgeVerdict verdict_from_json(const nlohmann::ordered_json& doc) {
  if (!doc.is_object()) fail(Errc::InvalidVerdict, "verdict must be an object");
  auto scores = doc.find("scores");
  if (scores == doc.end() || !scores->is_object()) fail(Errc::InvalidVerdict, "missing object 'scores'");
  JudgeVerdict v;
  for (auto aspect : kJudgeAspects) {
    const std::string key(aspect);
    auto it = scores->find(key);
    if (it == scores->end()) fail(Errc::InvalidVerdict, "missing aspect '" + key + "'");
    if (!it->is_number()) fail(Errc::InvalidVerdict, "aspect '" + key + "' score is not a number");
    double s = it->get<double>();
    if (!is_allowed_score(s)) {
      fail(Errc::InvalidVerdict, "aspect '" + key + "' has score " + it->dump() + ", expected one of 0, 0.5, 1");
    }
    v.scores[key] = s;
  }
  if (auto notes = doc.find("notes"); notes != doc.end() && !notes->is_null()) {
    if (!notes->is_object()) fail(Errc::InvalidVerdict, "'notes' must be an object");
    for (auto it = notes->begin(); it != notes->end(); ++it) {
      if (it->is_string()) v.notes[it.key()] = it->get<std::string>();
    }
  }
  return v;
}

/// Parses a judge response. One surrounding code fence is stripped; if the
/// text is still not a bare object, the first JSON object in it is used.
inline JudgeVerdict parse_verdict(std::string_view document) {
  const std::string body = strip_code_fence(document);
  auto doc = nlohmann::ordered_json::parse(body, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) {
    auto found = first_json_value(body, '{');
    if (!found) fail(Errc::MalformedDocument, "judge response contains no JSON object");
    doc = std::move(*found);
  }
  return verdict_from_json(doc);
}

struct AspectWeights {
  std::map<std::string, double> weight{
      {"app_name", 0.8},          {"user_action", 1.4},  {"title_bar", 1.0},       {"ribbon", 1.1},
      {"main_editing_area", 1.5}, {"sidebar_pane", 0.8}, {"navigation_area", 0.6}, {"status_bar", 0.8},
  };

  void validate() const {
    for (auto a : kJudgeAspects) {
      auto it = weight.find(std::string(a));
      if (it == weight.end() || !(it->second > 0.0)) {
        fail(Errc::ConfigError, "aspect weight for '" + std::string(a) + "' must be positive");
      }
    }
  }
};

/// Weighted mean of the aspect scores.
inline double judge_score(const JudgeVerdict& verdict, const AspectWeights& weights = {}) {
  validate_verdict(verdict);
  weights.validate();
  double num = 0.0;
  double den = 0.0;
  for (auto a : kJudgeAspects) {
    const std::string key(a);
    const double w = weights.weight.at(key);
    num += w * verdict.scores.at(key);
    den += w;
  }
  return num / den;
}

struct LengthPenaltyConfig {
  double r_low = 0.75;
  double r_up = 1.25;
  double m = 1.0;
  double beta = 1.0;

  void validate() const {
    if (!(r_low > 0.0 && r_low < r_up)) fail(Errc::ConfigError, "length ratios must satisfy 0 < r_low < r_up");
    if (!(m > 0.0)) fail(Errc::ConfigError, "maximum penalty m must be positive");
    if (!(beta >= 0.0)) fail(Errc::ConfigError, "beta must be non-negative");
  }
};

struct LengthInterval {
  std::int64_t l_min = 0;
  std::int64_t l_max = 0;
  friend bool operator==(const LengthInterval&, const LengthInterval&) = default;
};

inline LengthInterval length_interval(std::int64_t l_gt, const LengthPenaltyConfig& cfg = {}) {
  if (l_gt < 1) fail(Errc::InvalidLength, "ground-truth length must be at least 1, got " + std::to_string(l_gt));
  cfg.validate();
  const auto lo = static_cast<std::int64_t>(std::floor(cfg.r_low * static_cast<double>(l_gt)));
  const auto hi = static_cast<std::int64_t>(std::floor(cfg.r_up * static_cast<double>(l_gt)));
  LengthInterval iv;
  iv.l_min = std::max<std::int64_t>(1, lo);
  iv.l_max = std::max<std::int64_t>(iv.l_min + 1, hi);
  return iv;
}

/// Zero inside [l_min, l_max], linear in the relative deviation outside,
/// capped at m.
inline double length_penalty(std::int64_t l_pred, std::int64_t l_gt, const LengthPenaltyConfig& cfg = {}) {
  if (l_pred < 0) fail(Errc::InvalidLength, "predicted length must be non-negative");
  const auto iv = length_interval(l_gt, cfg);
  if (l_pred < iv.l_min) {
    const double dev = static_cast<double>(iv.l_min - l_pred) / static_cast<double>(iv.l_min);
    return cfg.m * std::min(1.0, dev);
  }
  if (l_pred > iv.l_max) {
    const double dev = static_cast<double>(l_pred - iv.l_max) / static_cast<double>(iv.l_max);
    return cfg.m * std::min(1.0, dev);
  }
  return 0.0;
}

inline double composite_reward(double judge, double penalty, const LengthPenaltyConfig& cfg = {}) {
  return judge - cfg.beta * penalty;
}

struct AdvantageConfig {
  double epsilon = 1e-8;
};

/// (r - mean) / (population std + eps). Identical rewards give all zeros.
inline std::vector<double> group_advantages(std::span<const double> rewards, const AdvantageConfig& cfg = {}) {
  if (rewards.size() < 2) fail(Errc::GroupTooSmall, "a reward group needs at least 2 samples");
  const auto n = static_cast<double>(rewards.size());
  std::vector<double> out(rewards.size(), 0.0);
  if (std::all_of(rewards.begin(), rewards.end(), [&](double r) { return r == rewards.front(); })) return out;
  const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
  double ss = 0.0;
  for (double r : rewards) ss += (r - mean) * (r - mean);
  const double sd = std::sqrt(ss / n);
  for (std::size_t i = 0; i < rewards.size(); ++i) out[i] = (rewards[i] - mean) / (sd + cfg.epsilon);
  return out;
}

struct RewardGroup {
  std::vector<double> rewards;
  std::vector<double> advantages;
};

using TokenCounter = std::function<std::size_t(std::string_view)>;

/// Number of maximal runs of non-whitespace code points, whitespace being the
/// Unicode White_Space property. Invalid UTF-8 bytes count as non-space.
inline std::size_t whitespace_token_count(std::string_view text) {
  std::size_t count = 0;
  bool in_token = false;
  for_each_code_point(text, [&](char32_t cp) {
    if (is_unicode_space(cp)) {
      in_token = false;
    } else if (!in_token) {
      in_token = true;
      ++count;
    }
  });
  return count;
}

inline std::size_t token_count(std::string_view text, const TokenCounter& counter = {}) {
  return counter ? counter(text) : whitespace_token_count(text);
}

/// Per-sample scoring record for one member of a reward group.
struct SampleReward {
  std::optional<double> judge;  ///< Missing when the judge failed.
  double penalty = 0.0;
  std::optional<double> reward;
  std::optional<double> advantage;
};

}  // namespace wmbench
