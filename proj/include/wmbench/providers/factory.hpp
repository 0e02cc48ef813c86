#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wmbench/error.hpp"
#include "wmbench/providers/contracts.hpp"
#include "wmbench/providers/mock.hpp"
#include "wmbench/providers/remote.hpp"
#include "wmbench/providers/transcript.hpp"
#include "wmbench/text_perception.hpp"

namespace wmbench {

/// One provider per role; a role absent from the config stays null.
struct ProviderSet {
  std::shared_ptr<TextualWorldModel> textual_wm;
  std::shared_ptr<VisualRealizer> visual_wm;
  std::shared_ptr<JudgeProvider> judge;
  std::shared_ptr<Embedder> embedder;
  std::shared_ptr<AgentPolicy> agent;
  /// Set when recording; every wrapped call lands here.
  std::shared_ptr<Transcript> transcript;

  json identities() const {
    json j = json::object();
    if (textual_wm) j[role::kTextualWm] = textual_wm->identity();
    if (visual_wm) j[role::kVisualWm] = visual_wm->identity();
    if (judge) j[role::kJudge] = judge->identity();
    if (embedder) j[role::kEmbedder] = embedder->identity();
    if (agent) j[role::kAgent] = agent->identity();
    return j;
  }
};

struct TranscriptOptions {
  std::optional<std::filesystem::path> record;
  std::optional<std::filesystem::path> replay;
};

namespace detail {

inline std::filesystem::path resolve_against(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

inline std::string provider_kind(const json& cfg, const char* role_name) {
  const auto kind = cfg.value("kind", std::string());
  if (kind != "mock" && kind != "remote") {
    fail(Errc::ConfigError, std::string("provider '") + role_name + "' needs kind mock or remote");
  }
  return kind;
}

inline json fixture_or_inline(const json& cfg, const char* key, const std::filesystem::path& base) {
  if (!cfg.contains(key)) return json::object();
  const auto& v = cfg.at(key);
  return v.is_string() ? load_json_file(resolve_against(base, v.get<std::string>())) : v;
}

}  // namespace detail

/// Builds providers from the "providers" config object. Relative fixture
/// paths resolve against `base_dir`. With a replay transcript every role is
/// answered from the transcript and the live config is ignored.
inline ProviderSet build_providers(const json& cfg, const std::filesystem::path& base_dir, const TranscriptOptions& topts = {},
                                   const std::filesystem::path& artifact_dir = "artifacts") {
  ProviderSet set;
  if (topts.replay) {
    auto store = ReplayStore::load(*topts.replay);
    set.textual_wm = std::make_shared<ReplayTextualWorldModel>(store);
    set.visual_wm = std::make_shared<ReplayVisualRealizer>(store);
    set.judge = std::make_shared<ReplayJudge>(store);
    set.embedder = std::make_shared<ReplayEmbedder>(store);
    set.agent = std::make_shared<ReplayAgent>(store);
  } else {
    if (!cfg.is_object()) fail(Errc::ConfigError, "providers must be an object keyed by role");
    for (const auto& [name, pc] : cfg.items()) {
      const char* r = name.c_str();
      const std::string kind = detail::provider_kind(pc, r);
      if (name == role::kTextualWm) {
        if (kind == "mock") {
          set.textual_wm = std::make_shared<MockTextualWorldModel>(detail::fixture_or_inline(pc, "fixtures", base_dir));
        } else {
          set.textual_wm = std::make_shared<RemoteTextualWorldModel>(endpoint_from_json(pc));
        }
      } else if (name == role::kVisualWm) {
        const auto out_dir = detail::resolve_against(base_dir, pc.value("out_dir", (artifact_dir / "realized").string()));
        if (kind == "mock") {
          set.visual_wm = std::make_shared<MockVisualRealizer>(parse_realizer_mode(pc.value("mode", "oracle")), out_dir);
        } else {
          set.visual_wm = std::make_shared<RemoteVisualRealizer>(endpoint_from_json(pc), out_dir);
        }
      } else if (name == role::kJudge) {
        if (kind == "mock") {
          set.judge = std::make_shared<MockJudge>(detail::fixture_or_inline(pc, "fixtures", base_dir));
        } else {
          set.judge = std::make_shared<RemoteJudge>(endpoint_from_json(pc));
        }
      } else if (name == role::kEmbedder) {
        std::shared_ptr<Embedder> inner;
        if (kind == "mock") {
          // "auto" is filled in by the text-perception suite; elsewhere it is empty.
          const bool deferred = pc.value("vocabulary", json()) == "auto";
          json vocab = pc.contains("vocabulary") && !deferred ? detail::fixture_or_inline(pc, "vocabulary", base_dir) : json::array();
          inner = std::make_shared<MockEmbedder>(vocab.get<std::vector<std::string>>());
        } else {
          inner = std::make_shared<RemoteEmbedder>(endpoint_from_json(pc));
        }
        set.embedder = std::make_shared<CachingEmbedder>(std::move(inner));
      } else if (name == role::kAgent) {
        if (kind == "mock") {
          set.agent = std::make_shared<MockAgent>(detail::fixture_or_inline(pc, "script", base_dir));
        } else {
          set.agent = std::make_shared<RemoteAgent>(endpoint_from_json(pc));
        }
      } else {
        fail(Errc::ConfigError, "unknown provider role '" + name + "'");
      }
    }
  }

  if (topts.record) {
    set.transcript = std::make_shared<Transcript>(*topts.record);
    if (set.textual_wm) set.textual_wm = std::make_shared<RecordingTextualWorldModel>(set.textual_wm, set.transcript);
    if (set.visual_wm) set.visual_wm = std::make_shared<RecordingVisualRealizer>(set.visual_wm, set.transcript);
    if (set.judge) set.judge = std::make_shared<RecordingJudge>(set.judge, set.transcript);
    if (set.embedder) set.embedder = std::make_shared<RecordingEmbedder>(set.embedder, set.transcript);
    if (set.agent) set.agent = std::make_shared<RecordingAgent>(set.agent, set.transcript);
  }
  return set;
}

}  // namespace wmbench
