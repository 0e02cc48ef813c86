#pragma once

// Record/replay of provider traffic at the contract level. Recorders wrap a
// live provider and append one JSONL entry per call; replayers answer from a
// transcript alone, keyed by (role, op, request digest).

#include <chrono>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "wmbench/digest.hpp"
#include "wmbench/error.hpp"
#include "wmbench/providers/contracts.hpp"

namespace wmbench {

namespace role {
inline constexpr const char* kTextualWm = "textual_wm";
inline constexpr const char* kVisualWm = "visual_wm";
inline constexpr const char* kJudge = "judge";
inline constexpr const char* kEmbedder = "embedder";
inline constexpr const char* kAgent = "agent";
}  // namespace role

struct TranscriptEntry {
  std::uint64_t seq = 0;
  std::string role;
  std::string op;
  std::string provider;
  std::string digest;
  json request;
  std::optional<json> response;
  std::optional<Error> error;
  double latency_ms = 0.0;
  int retries = 0;
};

inline json entry_to_json(const TranscriptEntry& e) {
  json j{{"seq", e.seq},         {"role", e.role},       {"op", e.op},
         {"provider", e.provider}, {"digest", e.digest}, {"request", e.request}};
  if (e.response) j["response"] = *e.response;
  if (e.error) j["error"] = {{"kind", std::string(to_string(e.error->code()))}, {"message", e.error->detail()}};
  j["latency_ms"] = e.latency_ms;
  j["retries"] = e.retries;
  return j;
}

inline TranscriptEntry entry_from_json(const json& j) {
  TranscriptEntry e;
  e.seq = j.value("seq", std::uint64_t{0});
  e.role = j.at("role").get<std::string>();
  e.op = j.at("op").get<std::string>();
  e.provider = j.value("provider", std::string());
  e.digest = j.at("digest").get<std::string>();
  e.request = j.value("request", json(nullptr));
  if (j.contains("response")) e.response = j.at("response");
  if (j.contains("error")) {
    const auto kind = errc_from_string(j.at("error").at("kind").get<std::string>());
    e.error = Error(kind.value_or(Errc::Transport), j.at("error").value("message", std::string()));
  }
  e.latency_ms = j.value("latency_ms", 0.0);
  e.retries = j.value("retries", 0);
  return e;
}

inline std::string request_digest(const json& request) { return sha256_hex(canonical_json(request)); }

/// Append-only log; writes are serialized and flushed per entry.
class Transcript {
 public:
  Transcript() = default;
  explicit Transcript(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    out_ = std::make_unique<std::ofstream>(path, std::ios::trunc);
    if (!*out_) fail(Errc::ConfigError, "cannot open transcript " + path.string() + " for writing");
  }

  void append(TranscriptEntry e) {
    std::lock_guard lock(mu_);
    e.seq = next_seq_++;
    if (out_) {
      *out_ << entry_to_json(e).dump() << '\n';
      out_->flush();
    }
    entries_.push_back(std::move(e));
  }

  std::vector<TranscriptEntry> entries() const {
    std::lock_guard lock(mu_);
    return entries_;
  }

  std::size_t count(std::string_view role_name) const {
    std::lock_guard lock(mu_);
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.role == role_name ? 1 : 0;
    return n;
  }

 private:
  mutable std::mutex mu_;
  std::unique_ptr<std::ofstream> out_;
  std::vector<TranscriptEntry> entries_;
  std::uint64_t next_seq_ = 0;
};

/// Replay index. Entries sharing a key are served in recorded order.
class ReplayStore {
 public:
  static std::shared_ptr<ReplayStore> load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(Errc::ConfigError, "cannot open transcript " + path.string());
    auto store = std::make_shared<ReplayStore>();
    std::string line;
    while (std::getline(in, line)) {
      if (trim_ascii(line).empty()) continue;
      auto j = json::parse(line, nullptr, false);
      if (j.is_discarded()) fail(Errc::ConfigError, "transcript line is not JSON");
      store->add(entry_from_json(j));
    }
    return store;
  }

  void add(TranscriptEntry e) {
    std::lock_guard lock(mu_);
    if (!e.provider.empty()) identities_[e.role] = e.provider;
    auto key = std::make_tuple(e.role, e.op, e.digest);
    queues_[std::move(key)].push_back(std::move(e));
  }

  TranscriptEntry take(const std::string& role_name, const std::string& op, const json& request) {
    const std::string digest = request_digest(request);
    std::lock_guard lock(mu_);
    auto it = queues_.find(std::make_tuple(role_name, op, digest));
    if (it == queues_.end() || it->second.empty()) {
      fail(Errc::ReplayMiss, "no recorded " + role_name + "." + op + " for request " + digest.substr(0, 12));
    }
    TranscriptEntry e = std::move(it->second.front());
    it->second.pop_front();
    return e;
  }

  std::string identity(const std::string& role_name) const {
    std::lock_guard lock(mu_);
    auto it = identities_.find(role_name);
    return it == identities_.end() ? "replay:" + role_name : it->second;
  }

 private:
  mutable std::mutex mu_;
  std::map<std::tuple<std::string, std::string, std::string>, std::deque<TranscriptEntry>> queues_;
  std::map<std::string, std::string> identities_;
};

namespace detail {

template <typename Call>
json recorded_call(Transcript& log, const char* role_name, const char* op, const std::string& provider, json request,
                   Call&& call) {
  TranscriptEntry e;
  e.role = role_name;
  e.op = op;
  e.provider = provider;
  e.digest = request_digest(request);
  e.request = std::move(request);
  last_call_retries = 0;
  const auto t0 = std::chrono::steady_clock::now();
  auto finish = [&] {
    e.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    e.retries = last_call_retries;
  };
  try {
    json response = call();
    finish();
    e.response = response;
    log.append(std::move(e));
    return response;
  } catch (const Error& err) {
    finish();
    e.error = err;
    log.append(std::move(e));
    throw;
  }
}

inline json replayed(ReplayStore& store, const char* role_name, const char* op, const json& request) {
  TranscriptEntry e = store.take(role_name, op, request);
  if (e.error) throw *e.error;
  if (!e.response) fail(Errc::ReplayMiss, std::string("recorded ") + role_name + "." + op + " has no response");
  return *e.response;
}

inline json embed_request(const std::vector<std::string>& texts) { return {{"texts", texts}}; }
inline json judge_request(const std::string& pred, const std::string& gt) { return {{"pred", pred}, {"gt", gt}}; }

inline json vectors_to_json(const std::vector<Embedding>& v) { return {{"vectors", v}}; }
inline std::vector<Embedding> vectors_from_json(const json& j) { return j.at("vectors").get<std::vector<Embedding>>(); }

}  // namespace detail

// ---------------------------------------------------------------------------
// Recorders

class RecordingTextualWorldModel final : public TextualWorldModel {
 public:
  RecordingTextualWorldModel(std::shared_ptr<TextualWorldModel> inner, std::shared_ptr<Transcript> log)
      : inner_(std::move(inner)), log_(std::move(log)) {}
  std::string identity() const override { return inner_->identity(); }

 protected:
  std::string do_predict_transition(const TransitionRequest& req) override {
    return detail::recorded_call(*log_, role::kTextualWm, "predict_transition", identity(), to_json(req), [&] {
             return json{{"text", inner_->predict_transition(req)}};
           })
        .at("text")
        .get<std::string>();
  }

 private:
  std::shared_ptr<TextualWorldModel> inner_;
  std::shared_ptr<Transcript> log_;
};

class RecordingVisualRealizer final : public VisualRealizer {
 public:
  RecordingVisualRealizer(std::shared_ptr<VisualRealizer> inner, std::shared_ptr<Transcript> log)
      : inner_(std::move(inner)), log_(std::move(log)) {}
  std::string identity() const override { return inner_->identity(); }

 protected:
  ImageRef do_realize_state(const RealizationRequest& req) override {
    return image_ref_from_json(detail::recorded_call(*log_, role::kVisualWm, "realize_state", identity(), to_json(req),
                                                     [&] { return image_ref_to_json(inner_->realize_state(req)); }));
  }

 private:
  std::shared_ptr<VisualRealizer> inner_;
  std::shared_ptr<Transcript> log_;
};

class RecordingJudge final : public JudgeProvider {
 public:
  RecordingJudge(std::shared_ptr<JudgeProvider> inner, std::shared_ptr<Transcript> log)
      : inner_(std::move(inner)), log_(std::move(log)) {}
  std::string identity() const override { return inner_->identity(); }

 protected:
  JudgeVerdict do_judge(const std::string& pred, const std::string& gt) override {
    return verdict_from_plain_json(detail::recorded_call(*log_, role::kJudge, "judge_transition", identity(),
                                                         detail::judge_request(pred, gt),
                                                         [&] { return verdict_to_json(inner_->judge_transition(pred, gt)); }));
  }

 private:
  std::shared_ptr<JudgeProvider> inner_;
  std::shared_ptr<Transcript> log_;
};

class RecordingEmbedder final : public Embedder {
 public:
  RecordingEmbedder(std::shared_ptr<Embedder> inner, std::shared_ptr<Transcript> log)
      : inner_(std::move(inner)), log_(std::move(log)) {}
  std::string identity() const override { return inner_->identity(); }

 protected:
  std::vector<Embedding> do_embed(const std::vector<std::string>& texts) override {
    return detail::vectors_from_json(detail::recorded_call(*log_, role::kEmbedder, "embed_texts", identity(),
                                                           detail::embed_request(texts),
                                                           [&] { return detail::vectors_to_json(inner_->embed_texts(texts)); }));
  }

 private:
  std::shared_ptr<Embedder> inner_;
  std::shared_ptr<Transcript> log_;
};

class RecordingAgent final : public AgentPolicy {
 public:
  RecordingAgent(std::shared_ptr<AgentPolicy> inner, std::shared_ptr<Transcript> log)
      : inner_(std::move(inner)), log_(std::move(log)) {}
  std::string identity() const override { return inner_->identity(); }

 protected:
  ProposalResult do_propose(const AgentProposeRequest& req) override {
    return proposal_from_json(detail::recorded_call(*log_, role::kAgent, "propose_actions", identity(), to_json(req),
                                                    [&] { return to_json(inner_->propose_actions(req)); }));
  }
  Selection do_select(const AgentSelectRequest& req) override {
    return selection_from_json(detail::recorded_call(*log_, role::kAgent, "select_action", identity(), to_json(req),
                                                     [&] { return to_json(inner_->select_action(req)); }));
  }
  ActOutcome do_act(const AgentActRequest& req) override {
    return act_outcome_from_json(detail::recorded_call(*log_, role::kAgent, "next_action", identity(), to_json(req),
                                                       [&] { return to_json(inner_->next_action(req)); }));
  }

 private:
  std::shared_ptr<AgentPolicy> inner_;
  std::shared_ptr<Transcript> log_;
};

// ---------------------------------------------------------------------------
// Replayers

class ReplayTextualWorldModel final : public TextualWorldModel {
 public:
  explicit ReplayTextualWorldModel(std::shared_ptr<ReplayStore> store) : store_(std::move(store)) {}
  std::string identity() const override { return store_->identity(role::kTextualWm); }

 protected:
  std::string do_predict_transition(const TransitionRequest& req) override {
    return detail::replayed(*store_, role::kTextualWm, "predict_transition", to_json(req)).at("text").get<std::string>();
  }

 private:
  std::shared_ptr<ReplayStore> store_;
};

class ReplayVisualRealizer final : public VisualRealizer {
 public:
  explicit ReplayVisualRealizer(std::shared_ptr<ReplayStore> store) : store_(std::move(store)) {}
  std::string identity() const override { return store_->identity(role::kVisualWm); }

 protected:
  ImageRef do_realize_state(const RealizationRequest& req) override {
    return image_ref_from_json(detail::replayed(*store_, role::kVisualWm, "realize_state", to_json(req)));
  }

 private:
  std::shared_ptr<ReplayStore> store_;
};

class ReplayJudge final : public JudgeProvider {
 public:
  explicit ReplayJudge(std::shared_ptr<ReplayStore> store) : store_(std::move(store)) {}
  std::string identity() const override { return store_->identity(role::kJudge); }

 protected:
  JudgeVerdict do_judge(const std::string& pred, const std::string& gt) override {
    return verdict_from_plain_json(detail::replayed(*store_, role::kJudge, "judge_transition", detail::judge_request(pred, gt)));
  }

 private:
  std::shared_ptr<ReplayStore> store_;
};

class ReplayEmbedder final : public Embedder {
 public:
  explicit ReplayEmbedder(std::shared_ptr<ReplayStore> store) : store_(std::move(store)) {}
  std::string identity() const override { return store_->identity(role::kEmbedder); }

 protected:
  std::vector<Embedding> do_embed(const std::vector<std::string>& texts) override {
    return detail::vectors_from_json(detail::replayed(*store_, role::kEmbedder, "embed_texts", detail::embed_request(texts)));
  }

 private:
  std::shared_ptr<ReplayStore> store_;
};

class ReplayAgent final : public AgentPolicy {
 public:
  explicit ReplayAgent(std::shared_ptr<ReplayStore> store) : store_(std::move(store)) {}
  std::string identity() const override { return store_->identity(role::kAgent); }

 protected:
  ProposalResult do_propose(const AgentProposeRequest& req) override {
    return proposal_from_json(detail::replayed(*store_, role::kAgent, "propose_actions", to_json(req)));
  }
  Selection do_select(const AgentSelectRequest& req) override {
    return selection_from_json(detail::replayed(*store_, role::kAgent, "select_action", to_json(req)));
  }
  ActOutcome do_act(const AgentActRequest& req) override {
    return act_outcome_from_json(detail::replayed(*store_, role::kAgent, "next_action", to_json(req)));
  }

 private:
  std::shared_ptr<ReplayStore> store_;
};

}  // namespace wmbench
