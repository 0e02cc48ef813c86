#pragma once

// Remote providers over an OpenAI-compatible HTTP surface:
// POST {base}/chat/completions, {base}/images/edits (JSON body, b64_json
// reply) and {base}/embeddings. Images travel inline as base64 data URIs.

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
// <resolv.h> defines _res as a macro, which collides with Eigen parameter names.
#ifdef _res
#undef _res
#endif
#include <nlohmann/json.hpp>

#include "wmbench/digest.hpp"
#include "wmbench/error.hpp"
#include "wmbench/image.hpp"
#include "wmbench/prompts.hpp"
#include "wmbench/providers/contracts.hpp"

namespace wmbench {

struct ProviderEndpoint {
  std::string base_url;  ///< e.g. "https://api.example.com/v1"
  std::string model;
  std::string api_key_env;  ///< Name of the variable holding the token, never the token.
  double timeout_s = 60.0;
  int max_retries = 3;
  double backoff_initial_s = 0.5;
  double backoff_max_s = 8.0;
  std::optional<double> temperature;
  std::optional<double> top_p;
  int max_parallel = 4;
  double min_interval_s = 0.0;  ///< Spacing between request starts.

  void validate() const {
    if (base_url.empty()) fail(Errc::ConfigError, "endpoint base_url is empty");
    if (!(timeout_s > 0.0)) fail(Errc::ConfigError, "endpoint timeout must be positive");
    if (max_retries < 0) fail(Errc::ConfigError, "endpoint max_retries must be >= 0");
    if (max_parallel < 1) fail(Errc::ConfigError, "endpoint max_parallel must be >= 1");
  }
};

inline ProviderEndpoint endpoint_from_json(const json& j) {
  ProviderEndpoint e;
  e.base_url = j.value("base_url", std::string());
  e.model = j.value("model", std::string());
  e.api_key_env = j.value("api_key_env", std::string());
  e.timeout_s = j.value("timeout_s", e.timeout_s);
  e.max_retries = j.value("max_retries", e.max_retries);
  e.backoff_initial_s = j.value("backoff_initial_s", e.backoff_initial_s);
  e.backoff_max_s = j.value("backoff_max_s", e.backoff_max_s);
  if (j.contains("temperature") && !j["temperature"].is_null()) e.temperature = j["temperature"].get<double>();
  if (j.contains("top_p") && !j["top_p"].is_null()) e.top_p = j["top_p"].get<double>();
  e.max_parallel = j.value("max_parallel", e.max_parallel);
  e.min_interval_s = j.value("min_interval_s", e.min_interval_s);
  e.validate();
  return e;
}

/// Shared HTTP plumbing: bounded parallelism, request spacing, retries with
/// exponential backoff on connection failures, 429 and 5xx.
class HttpTransport {
 public:
  explicit HttpTransport(ProviderEndpoint ep) : ep_(std::move(ep)) {
    ep_.validate();
    const auto scheme_end = ep_.base_url.find("://");
    const auto path_start = ep_.base_url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    origin_ = ep_.base_url.substr(0, path_start);
    prefix_ = path_start == std::string::npos ? "" : ep_.base_url.substr(path_start);
    while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
    if (!ep_.api_key_env.empty()) {
      const char* v = std::getenv(ep_.api_key_env.c_str());
      if (!v || !*v) fail(Errc::ConfigError, "environment variable " + ep_.api_key_env + " is not set");
      token_ = v;
    }
  }

  const ProviderEndpoint& endpoint() const { return ep_; }

  json post_json(const std::string& path, const json& body) {
    Slot slot(*this);
    const std::string payload = body.dump();
    std::string last_error;
    for (int attempt = 0; attempt <= ep_.max_retries; ++attempt) {
      last_call_retries = attempt;
      if (attempt > 0) {
        const double wait = std::min(ep_.backoff_max_s, ep_.backoff_initial_s * std::pow(2.0, attempt - 1));
        std::this_thread::sleep_for(std::chrono::duration<double>(wait));
      }
      pace();
      httplib::Client cli(origin_);
      const auto secs = static_cast<time_t>(ep_.timeout_s);
      const auto usecs = static_cast<time_t>((ep_.timeout_s - static_cast<double>(secs)) * 1e6);
      cli.set_connection_timeout(secs, usecs);
      cli.set_read_timeout(secs, usecs);
      cli.set_write_timeout(secs, usecs);
      httplib::Headers headers;
      if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);
      auto res = cli.Post(prefix_ + path, headers, payload, "application/json");
      if (!res) {
        last_error = "connection failed: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status == 429 || res->status >= 500) {
        last_error = "HTTP " + std::to_string(res->status);
        continue;
      }
      if (res->status < 200 || res->status >= 300) {
        fail(Errc::Transport, "HTTP " + std::to_string(res->status) + " from " + path + ": " + res->body.substr(0, 200));
      }
      auto j = json::parse(res->body, nullptr, false);
      if (j.is_discarded()) fail(Errc::Transport, "non-JSON body from " + path);
      return j;
    }
    fail(Errc::Transport, path + " failed after " + std::to_string(ep_.max_retries) + " retries: " + last_error);
  }

 private:
  struct Slot {
    explicit Slot(HttpTransport& t) : t_(t) {
      std::unique_lock lock(t_.mu_);
      t_.cv_.wait(lock, [&] { return t_.in_flight_ < t_.ep_.max_parallel; });
      ++t_.in_flight_;
    }
    ~Slot() {
      {
        std::lock_guard lock(t_.mu_);
        --t_.in_flight_;
      }
      t_.cv_.notify_one();
    }
    HttpTransport& t_;
  };

  void pace() {
    if (ep_.min_interval_s <= 0.0) return;
    std::chrono::steady_clock::time_point start;
    {
      std::lock_guard lock(mu_);
      const auto now = std::chrono::steady_clock::now();
      start = std::max(now, next_start_);
      next_start_ = start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                std::chrono::duration<double>(ep_.min_interval_s));
    }
    std::this_thread::sleep_until(start);
  }

  ProviderEndpoint ep_;
  std::string origin_;
  std::string prefix_;
  std::string token_;
  std::mutex mu_;
  std::condition_variable cv_;
  int in_flight_ = 0;
  std::chrono::steady_clock::time_point next_start_{};
};

inline std::string image_data_uri(const ImageRef& ref) {
  const auto bytes = read_file_bytes(ref.path);
  const bool jpeg = bytes.size() >= 2 && bytes[0] == 0xFF && bytes[1] == 0xD8;
  return std::string("data:") + (jpeg ? "image/jpeg" : "image/png") + ";base64," + base64_encode(bytes);
}

/// Chat-completions dialect: one user message whose content interleaves text
/// and image_url parts in prompt order.
class ChatClient {
 public:
  explicit ChatClient(ProviderEndpoint ep) : http_(std::make_shared<HttpTransport>(std::move(ep))) {}

  std::string complete(const RenderedPrompt& prompt, const SamplingParams& sampling = {}) {
    json content = json::array();
    for (const auto& p : prompt.parts) {
      if (p.kind == PromptPart::Kind::Text) {
        content.push_back({{"type", "text"}, {"text", p.text}});
      } else {
        content.push_back({{"type", "image_url"}, {"image_url", {{"url", image_data_uri(p.image)}}}});
      }
    }
    json body{{"model", http_->endpoint().model}, {"messages", json::array({{{"role", "user"}, {"content", content}}})}};
    if (auto t = sampling.temperature ? sampling.temperature : http_->endpoint().temperature) body["temperature"] = *t;
    if (auto p = sampling.top_p ? sampling.top_p : http_->endpoint().top_p) body["top_p"] = *p;
    const json reply = http_->post_json("/chat/completions", body);
    try {
      const json& msg = reply.at("choices").at(0).at("message").at("content");
      if (msg.is_string()) return msg.get<std::string>();
      std::string out;
      for (const auto& part : msg) {
        if (part.value("type", "") == "text") out += part.value("text", "");
      }
      return out;
    } catch (const json::exception&) {
      fail(Errc::Transport, "chat reply lacks choices[0].message.content");
    }
  }

  HttpTransport& http() { return *http_; }
  std::string identity(const char* role_name) const {
    return std::string("remote:") + role_name + "/" + http_->endpoint().model;
  }

 private:
  std::shared_ptr<HttpTransport> http_;
};

class RemoteTextualWorldModel final : public TextualWorldModel {
 public:
  explicit RemoteTextualWorldModel(ProviderEndpoint ep) : chat_(std::move(ep)) {}
  std::string identity() const override { return chat_.identity("textual_wm"); }

 protected:
  std::string do_predict_transition(const TransitionRequest& req) override {
    const auto prompt = render_transition_prompt(req);
    // Empty replies are re-asked; the contract turns a final empty reply
    // into ProviderRefusal.
    std::string out;
    for (int attempt = 0; attempt <= chat_.http().endpoint().max_retries && trim_ascii(out).empty(); ++attempt) {
      out = std::string(trim_ascii(chat_.complete(prompt, req.sampling)));
    }
    return out;
  }

 private:
  mutable ChatClient chat_;
};

class RemoteVisualRealizer final : public VisualRealizer {
 public:
  RemoteVisualRealizer(ProviderEndpoint ep, std::filesystem::path out_dir)
      : http_(std::move(ep)), out_dir_(std::move(out_dir)) {}
  std::string identity() const override { return "remote:visual_wm/" + http_.endpoint().model; }

 protected:
  ImageRef do_realize_state(const RealizationRequest& req) override {
    const json body{{"model", http_.endpoint().model},
                    {"prompt", req.transition_text},
                    {"image", image_data_uri(req.screenshot)},
                    {"response_format", "b64_json"}};
    const json reply = http_.post_json("/images/edits", body);
    const json* b64 = nullptr;
    if (reply.contains("data") && reply["data"].is_array() && !reply["data"].empty() && reply["data"][0].contains("b64_json") &&
        reply["data"][0]["b64_json"].is_string()) {
      b64 = &reply["data"][0]["b64_json"];
    }
    if (!b64) fail(Errc::InvalidImagePayload, "realizer reply has no data[0].b64_json");
    std::vector<std::uint8_t> bytes = base64_decode(b64->get<std::string>());
    Image img;
    try {
      img = decode_image(bytes, "realizer payload");
    } catch (const Error& e) {
      fail(Errc::InvalidImagePayload, e.detail());
    }
    std::filesystem::create_directories(out_dir_);
    const auto path = out_dir_ / (req.record_id + "_" + sha256_hex(req.transition_text).substr(0, 16) + ".png");
    save_png(img, path);
    return make_ref(path, img);
  }

 private:
  mutable HttpTransport http_;
  std::filesystem::path out_dir_;
};

class RemoteJudge final : public JudgeProvider {
 public:
  explicit RemoteJudge(ProviderEndpoint ep) : chat_(std::move(ep)) {}
  std::string identity() const override { return chat_.identity("judge"); }

 protected:
  JudgeVerdict do_judge(const std::string& pred, const std::string& gt) override {
    const auto prompt = render_judge_prompt(pred, gt);
    return judge_with_reask([&](int) { return chat_.complete(prompt); });
  }

 private:
  mutable ChatClient chat_;
};

class RemoteEmbedder final : public Embedder {
 public:
  explicit RemoteEmbedder(ProviderEndpoint ep) : http_(std::move(ep)) {}
  std::string identity() const override { return "remote:embedder/" + http_.endpoint().model; }

 protected:
  std::vector<Embedding> do_embed(const std::vector<std::string>& texts) override {
    const json reply = http_.post_json("/embeddings", {{"model", http_.endpoint().model}, {"input", texts}});
    if (!reply.contains("data") || !reply["data"].is_array()) fail(Errc::Transport, "embedding reply lacks data");
    std::vector<Embedding> out(reply["data"].size());
    for (std::size_t i = 0; i < reply["data"].size(); ++i) {
      const auto& d = reply["data"][i];
      const std::size_t idx = d.value("index", i);
      if (idx >= out.size()) fail(Errc::DimensionInconsistency, "embedding index out of range");
      out[idx] = d.at("embedding").get<Embedding>();
    }
    return out;
  }

 private:
  mutable HttpTransport http_;
};

class RemoteAgent final : public AgentPolicy {
 public:
  explicit RemoteAgent(ProviderEndpoint ep) : chat_(std::move(ep)) {}
  std::string identity() const override { return chat_.identity("agent"); }

 protected:
  ProposalResult do_propose(const AgentProposeRequest& req) override {
    const std::string reply = chat_.complete(render_option_prompt(req));
    // Prose with no array at all counts as an empty proposal.
    if (!find_balanced(strip_code_fence(reply), '[')) fail(Errc::EmptyArray, "agent reply holds no candidate array");
    std::string doc = strip_code_fence(reply);
    if (auto arr = find_balanced(doc, '['); arr && trim_ascii(doc).front() != '[') doc = *arr;
    return ProposalResult{parse_candidate_array(doc), {}};
  }

  Selection do_select(const AgentSelectRequest& req) override {
    const auto prompt = render_selection_prompt(req);
    return select_with_reask([&](int) { return chat_.complete(prompt); }, req.options.size());
  }

  ActOutcome do_act(const AgentActRequest& req) override {
    const std::string raw = chat_.complete(render_acs_prompt(req));
    auto doc = first_json_value(strip_code_fence(raw), '{');
    if (!doc) return ActOutcome{std::nullopt, raw};
    try {
      if (doc->contains("tool_call")) return ActOutcome{action_from_json((*doc)["tool_call"]), raw};
      return ActOutcome{action_from_json(*doc), raw};
    } catch (const Error&) {
      return ActOutcome{std::nullopt, raw};
    }
  }

 private:
  mutable ChatClient chat_;
};

}  // namespace wmbench
