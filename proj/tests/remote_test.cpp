#include <atomic>
#include <thread>

#include <gtest/gtest.h>

#include "support.hpp"
#include "wmbench/providers/remote.hpp"
#include "wmbench/synthetic.hpp"

namespace wmbench {
namespace {

using nlohmann::json;

/// Loopback server; handlers are installed per test before start().
class LocalServer {
 public:
  httplib::Server svr;
  int port = 0;

  void start() {
    port = svr.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { svr.listen_after_bind(); });
    svr.wait_until_ready();
  }
  ~LocalServer() {
    svr.stop();
    if (thread_.joinable()) thread_.join();
  }

  ProviderEndpoint endpoint(int retries = 2) const {
    ProviderEndpoint ep;
    ep.base_url = "http://127.0.0.1:" + std::to_string(port) + "/v1";
    ep.model = "test-model";
    ep.max_retries = retries;
    ep.backoff_initial_s = 0.001;
    ep.backoff_max_s = 0.002;
    ep.timeout_s = 5.0;
    return ep;
  }

 private:
  std::thread thread_;
};

json chat_reply(const std::string& content) {
  return {{"choices", json::array({{{"message", {{"role", "assistant"}, {"content", content}}}}})}};
}

TEST(Remote, RetriesServerErrorsThenSucceeds) {
  testing::TempDir dir;
  save_png(synthetic::pattern_image(4, 4, 1), dir / "s.png");
  LocalServer s;
  std::atomic<int> hits{0};
  s.svr.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    if (++hits < 3) {
      res.status = hits == 1 ? 503 : 429;
      return;
    }
    const auto body = json::parse(req.body);
    EXPECT_EQ(body["model"], "test-model");
    res.set_content(chat_reply("  The dialog opens.  ").dump(), "application/json");
  });
  s.start();
  RemoteTextualWorldModel wm(s.endpoint());
  TransitionRequest r;
  r.screenshot = {(dir / "s.png").string(), 4, 4};
  r.app_name = "Microsoft Word";
  r.gui_description = "Click.";
  EXPECT_EQ(wm.predict_transition(r), "The dialog opens.");
  EXPECT_EQ(hits.load(), 3);
}

TEST(Remote, ClientErrorsAreNotRetried) {
  LocalServer s;
  std::atomic<int> hits{0};
  s.svr.Post("/v1/embeddings", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 400;
    res.set_content("bad request", "text/plain");
  });
  s.start();
  RemoteEmbedder e(s.endpoint());
  try {
    e.embed_texts({"a"});
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), Errc::Transport);
  }
  EXPECT_EQ(hits.load(), 1);
}

TEST(Remote, RetryBudgetExhausted) {
  LocalServer s;
  std::atomic<int> hits{0};
  s.svr.Post("/v1/embeddings", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 500;
  });
  s.start();
  RemoteEmbedder e(s.endpoint(2));
  EXPECT_THROW(e.embed_texts({"a"}), Error);
  EXPECT_EQ(hits.load(), 3);
}

TEST(Remote, EmbeddingsAreReorderedByIndexAndNormalized) {
  LocalServer s;
  s.svr.Post("/v1/embeddings", [&](const httplib::Request& req, httplib::Response& res) {
    EXPECT_EQ(json::parse(req.body)["input"], json({"first", "second"}));
    json data = json::array({{{"index", 1}, {"embedding", {0.0, 2.0}}}, {{"index", 0}, {"embedding", {3.0, 4.0}}}});
    res.set_content(json{{"data", data}}.dump(), "application/json");
  });
  s.start();
  RemoteEmbedder e(s.endpoint());
  const auto v = e.embed_texts({"first", "second"});
  EXPECT_DOUBLE_EQ(v[0][0], 0.6);
  EXPECT_DOUBLE_EQ(v[0][1], 0.8);
  EXPECT_DOUBLE_EQ(v[1][1], 1.0);
}

TEST(Remote, ImageEditsDecodeOrRejectPayload) {
  testing::TempDir dir;
  const auto img = synthetic::pattern_image(8, 6, 4);
  save_png(img, dir / "s.png");
  LocalServer s;
  std::atomic<bool> valid{true};
  s.svr.Post("/v1/images/edits", [&](const httplib::Request& req, httplib::Response& res) {
    const auto body = json::parse(req.body);
    EXPECT_EQ(body["prompt"], "The menu expands.");
    EXPECT_EQ(body["image"].get<std::string>().rfind("data:image/png;base64,", 0), 0u);
    const std::string b64 = valid ? base64_encode(encode_png(img)) : base64_encode(std::vector<std::uint8_t>{1, 2, 3});
    res.set_content(json{{"data", json::array({{{"b64_json", b64}}})}}.dump(), "application/json");
  });
  s.start();
  RemoteVisualRealizer r(s.endpoint(), dir / "out");
  RealizationRequest req{"rec", {(dir / "s.png").string(), 8, 6}, "The menu expands.", std::nullopt};
  const auto ref = r.realize_state(req);
  EXPECT_EQ(load_image(ref.path), img);
  valid = false;
  try {
    r.realize_state(req);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::InvalidImagePayload);
  }
}

TEST(Remote, JudgeReasksOnceThroughTheWire) {
  LocalServer s;
  std::atomic<int> hits{0};
  s.svr.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    const std::string content = ++hits == 1 ? "I think it is fine." : verdict_to_json(uniform_verdict(0.5)).dump();
    res.set_content(chat_reply(content).dump(), "application/json");
  });
  s.start();
  RemoteJudge j(s.endpoint());
  EXPECT_EQ(judge_score(j.judge_transition("pred", "gt")), 0.5);
  EXPECT_EQ(hits.load(), 2);
}

TEST(Remote, SelectionFromWire) {
  testing::TempDir dir;
  save_png(synthetic::pattern_image(4, 4, 9), dir / "now.png");
  LocalServer s;
  s.svr.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    const auto content = json::parse(req.body)["messages"][0]["content"];
    EXPECT_EQ(content[1]["type"], "image_url");
    res.set_content(chat_reply("```json\n{\"thought\": \"two\", \"action_idx\": 2}\n```").dump(), "application/json");
  });
  s.start();
  RemoteAgent agent(s.endpoint());
  AgentSelectRequest req;
  req.screenshot = {(dir / "now.png").string(), 4, 4};
  req.mode = SearchMode::Text;
  for (int i = 1; i <= 3; ++i) {
    PresentedOption o;
    o.index = i;
    o.predicted_text = "p";
    req.options.push_back(o);
  }
  const auto sel = agent.select_action(req);
  EXPECT_EQ(sel.action_idx, 2);
  EXPECT_EQ(sel.thought, "two");
}

TEST(Remote, MissingKeyVariableIsAConfigError) {
  ProviderEndpoint ep;
  ep.base_url = "http://127.0.0.1:1/v1";
  ep.api_key_env = "WMBENCH_TEST_SURELY_UNSET_VARIABLE";
  try {
    RemoteJudge j(ep);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ConfigError);
  }
}

TEST(Remote, EndpointValidation) {
  EXPECT_THROW(endpoint_from_json(json{{"model", "m"}}), Error);
  EXPECT_THROW(endpoint_from_json(json{{"base_url", "http://x"}, {"max_parallel", 0}}), Error);
  const auto ep = endpoint_from_json(json{{"base_url", "http://x/v1"}, {"temperature", 0.2}});
  EXPECT_EQ(ep.temperature, 0.2);
}

}  // namespace
}  // namespace wmbench
