#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "support.hpp"
#include "wmbench/cli/commands.hpp"
#include "wmbench/synthetic.hpp"

namespace wmbench {
namespace {

namespace fs = std::filesystem;
using namespace wmbench::cli;
using nlohmann::json;

std::vector<std::string> cells(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  for (std::string c; std::getline(ss, c, '|');) out.emplace_back(trim_ascii(c));
  return out;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string l; std::getline(ss, l);) out.push_back(l);
  return out;
}

RunContext suite_context(const testing::TempDir& dir, Overrides o = {}) {
  synthetic::write_suite_workspace(dir.path());
  o.config = dir / "config.json";
  return make_context(o);
}

std::vector<json> read_jsonl(const fs::path& p) {
  std::vector<json> out;
  std::ifstream in(p);
  for (std::string l; std::getline(in, l);) {
    if (!l.empty()) out.push_back(json::parse(l));
  }
  return out;
}

TEST(Tables, JudgeLayout) {
  testing::TempDir dir;
  const auto res = cmd_eval("judge", suite_context(dir));
  const auto l = lines_of(res.summary);
  ASSERT_EQ(l.size(), 3u);
  EXPECT_EQ(cells(l[0]), (std::vector<std::string>{"Model", "mock-wm"}));
  EXPECT_EQ(l[1].find_first_not_of('-'), std::string::npos);
  EXPECT_EQ(cells(l[2])[0], "Judge Score");
}

TEST(Tables, AcsLayoutAndHandCountedScore) {
  testing::TempDir dir;
  const auto res = cmd_eval("acs", suite_context(dir));
  const auto l = lines_of(res.summary);
  EXPECT_EQ(cells(l[0]), (std::vector<std::string>{"Model", "Agent", "Score"}));
  // d1, d3, d5 agree fully; d2 and d4 agree on function and status; d6 has no wm action.
  EXPECT_EQ(cells(l[2]), (std::vector<std::string>{"mock-wm", "mock-agent", "0.6667"}));
  EXPECT_DOUBLE_EQ(res.report.aggregates["acs"].get<double>(), 4.0 / 6.0);
  EXPECT_TRUE(fs::exists(dir / "out" / "acs_breakdown.csv"));
}

TEST(Tables, VisualLayoutWithOracleRealizer) {
  testing::TempDir dir;
  const auto res = cmd_eval("visual", suite_context(dir));
  const auto l = lines_of(res.summary);
  EXPECT_EQ(cells(l[0]), table_schema::kVisual);
  const auto row = cells(l[2]);
  EXPECT_EQ(row[0], "mock-realizer");
  EXPECT_EQ(row[1], "inf");
  EXPECT_EQ(row[2], "1.00");
  EXPECT_EQ(res.report.aggregates["psnr"], "inf");
}

TEST(Tables, TextPerceptionLayoutAndPerAppMeans) {
  testing::TempDir dir;
  const auto res = cmd_eval("trs", suite_context(dir));
  const auto l = lines_of(res.summary);
  EXPECT_EQ(l[0], "Text Perception");
  EXPECT_EQ(cells(l[1]), table_schema::kTrs);
  // Per record: 1, 3/4 | 7/8, 1/2 | 1, 0.
  const auto& a = res.report.aggregates;
  EXPECT_DOUBLE_EQ(a["word"].get<double>(), 0.875);
  EXPECT_DOUBLE_EQ(a["excel"].get<double>(), 0.6875);
  EXPECT_DOUBLE_EQ(a["ppt"].get<double>(), 0.5);
  EXPECT_DOUBLE_EQ(a["overall"].get<double>(), 4.125 / 6.0);
}

TEST(Tables, SearchLayouts) {
  testing::TempDir dir;
  synthetic::write_search_dataset(dir.path());
  Overrides o;
  o.config = dir / "config.json";
  const auto plain = cmd_eval("search", make_context(o));
  auto l = lines_of(plain.summary);
  EXPECT_EQ(cells(l[0]), table_schema::kSearch);
  EXPECT_EQ(cells(l[2]), (std::vector<std::string>{"mock-agent", "0.1500", "0.5500", "0.5500", "0.5500"}));

  o.exclude_no_gt = true;
  o.mode = "none,text";
  const auto excl = cmd_eval("search", make_context(o));
  l = lines_of(excl.summary);
  EXPECT_EQ(cells(l[0]), table_schema::kSearchNoGt);
  EXPECT_EQ(cells(l[2]), (std::vector<std::string>{"mock-agent", "8", "0.2500", "0.9167", "-", "-"}));
  EXPECT_EQ(excl.report.error_tallies.at("SelectionFailure"), 2u);
}

TEST(Judge, PredictionsEqualToReferenceScoreOne) {
  testing::TempDir dir;
  auto ctx = suite_context(dir);
  std::vector<json> preds;
  for (const auto& line : read_jsonl(dir / "manifest.jsonl")) {
    preds.push_back({{"record_id", line["record_id"]}, {"pred", "```\n" + line["gt_transition_text"].get<std::string>() + "\n```"}});
  }
  synthetic::write_jsonl(dir / "preds.jsonl", preds);
  ctx.config["judge"]["predictions"] = "preds.jsonl";
  const auto res = cmd_eval("judge", ctx);
  EXPECT_EQ(res.report.aggregates["judge_score"].get<double>(), 1.0);
  EXPECT_EQ(res.report.aggregates["scored"].get<int>(), 6);
}

json verdict(double s) {
  json scores = json::object();
  for (auto a : kJudgeAspects) scores[std::string(a)] = s;
  return {{"scores", scores}};
}

TEST(Reward, ZeroOneGroupGivesUnitAdvantages) {
  testing::TempDir dir;
  auto ctx = suite_context(dir);
  synthetic::write_jsonl(dir / "g.jsonl", {{{"record_id", "g"},
                                            {"gt", "same words here"},
                                            {"samples",
                                             {{{"pred", "same words here"}, {"verdict", verdict(0.0)}},
                                              {{"pred", "same words here"}, {"verdict", verdict(1.0)}}}}}});
  cmd_reward(dir / "g.jsonl", ctx);
  const auto rows = read_jsonl(dir / "out" / "reward_samples.jsonl");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0]["penalty"].get<double>(), 0.0);
  EXPECT_NEAR(rows[0]["advantage"].get<double>(), -1.0, 1e-6);
  EXPECT_NEAR(rows[1]["advantage"].get<double>(), 1.0, 1e-6);
}

TEST(Reward, BetaZeroRewardEqualsJudge) {
  testing::TempDir dir;
  auto ctx = suite_context(dir);
  ctx.config["reward"]["beta"] = 0.0;
  cmd_reward(dir / "reward_groups.jsonl", ctx);
  for (const auto& r : read_jsonl(dir / "out" / "reward_samples.jsonl")) {
    if (!r["reward"].is_null()) {
      EXPECT_EQ(r["reward"], r["judge_score"]);
    }
  }
}

TEST(Reward, DisallowedScoreNamesTheSample) {
  testing::TempDir dir;
  auto ctx = suite_context(dir);
  synthetic::write_jsonl(dir / "g.jsonl", {{{"record_id", "grp"},
                                            {"gt", "x"},
                                            {"samples", {{{"pred", "x"}, {"verdict", verdict(1.0)}}, {{"pred", "y"}, {"verdict", verdict(0.7)}}}}}});
  try {
    cmd_reward(dir / "g.jsonl", ctx);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::InvalidVerdict);
    EXPECT_NE(e.detail().find("group grp sample 1"), std::string::npos);
  }
}

TEST(Reward, GroupOfOneIsRejected) {
  testing::TempDir dir;
  auto ctx = suite_context(dir);
  synthetic::write_jsonl(dir / "g.jsonl", {{{"record_id", "solo"}, {"gt", "x"}, {"samples", {{{"pred", "x"}, {"verdict", verdict(1.0)}}}}}});
  EXPECT_THROW(cmd_reward(dir / "g.jsonl", ctx), Error);
}

TEST(Ingest, RejectedDuplicatesAreListed) {
  testing::TempDir dir;
  const auto files = synthetic::write_split_manifest(dir.path(), {{{{3, 2, 1}, {1, 1, 1}, {2, 2, 2}}}, 2, 1, 32, 18});
  Overrides o;
  o.out_dir = dir / "out";
  auto ctx = make_context(o);
  ctx.config["dataset"]["resolution"] = {32, 18};
  const auto res = cmd_ingest(files.manifest, files.image_root, ctx);
  std::vector<std::string> dups;
  for (const auto& r : read_jsonl(dir / "out" / "rejections.jsonl")) {
    if (r["reason"] == "unchanged_frame") dups.push_back(r["record_id"]);
  }
  EXPECT_EQ(dups, files.unchanged_ids);
  EXPECT_EQ(res.report.aggregates["rejections_by_reason"]["invalid_action"], 1);
  const auto l = lines_of(res.summary);
  EXPECT_EQ(cells(l[0]), table_schema::kSplits);
  EXPECT_EQ(cells(l[2]), (std::vector<std::string>{"Training", "3", "2", "1"}));
  EXPECT_EQ(cells(l[5]), (std::vector<std::string>{"Total", "6", "5", "4"}));
}

TEST(Config, FlagsBeatFileBeatsDefaults) {
  testing::TempDir dir;
  synthetic::write_json(dir / "c.json", {{"jobs", 3}, {"search", {{"num_options", 4}}}});
  Overrides o;
  o.config = dir / "c.json";
  auto ctx = make_context(o);
  EXPECT_EQ(ctx.jobs, 3);
  EXPECT_EQ(ctx.config["search"]["num_options"], 4);
  EXPECT_EQ(ctx.config["search"]["exclude_no_gt"], false);
  EXPECT_EQ(ctx.config["reward"]["beta"], 1.0);
  o.jobs = 5;
  o.num_options = 2;
  ctx = make_context(o);
  EXPECT_EQ(ctx.jobs, 5);
  EXPECT_EQ(ctx.config["search"]["num_options"], 2);
  EXPECT_EQ(ctx.out_dir, dir.path() / "wmbench_out");
}

TEST(Config, ModeListParsing) {
  EXPECT_EQ(parse_mode_list("all"), (std::vector<std::string>{"none", "text", "image", "image_text"}));
  EXPECT_EQ(parse_mode_list("image+text, none"), (std::vector<std::string>{"image_text", "none"}));
  EXPECT_THROW(parse_mode_list("telepathy"), Error);
}

TEST(Replay, RecordedRunReplaysToIdenticalAggregates) {
  testing::TempDir dir;
  Overrides o;
  o.record = dir / "t.jsonl";
  auto ctx = suite_context(dir, o);
  const auto live = cmd_eval("acs", ctx);
  const auto r = cmd_replay(live.report.artifacts.back(), Overrides{});
  EXPECT_TRUE(r.identical);
  EXPECT_EQ(r.rerun.report.aggregates, live.report.aggregates);
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(WMBENCH_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Executable, ExitCodes) {
  testing::TempDir dir;
  synthetic::write_jsonl(dir / "empty.jsonl", {});
  EXPECT_EQ(run_cli("--out " + (dir / "o").string() + " ingest " + (dir / "empty.jsonl").string() + " " + dir.path().string()),
            kExitEmptyDataset);
  synthetic::write_json(dir / "bad.json", {{"jobs", 0}});
  EXPECT_EQ(run_cli("--config " + (dir / "bad.json").string() + " eval judge"), kExitConfig);
  synthetic::write_suite_workspace(dir / "ws");
  EXPECT_EQ(run_cli("--config " + (dir / "ws" / "config.json").string() + " eval acs"), kExitOk);
  EXPECT_TRUE(fs::exists(dir / "ws" / "out" / "acs_report.json"));
}

TEST(Executable, RecordThenReplay) {
  testing::TempDir dir;
  synthetic::write_search_dataset(dir.path());
  const std::string cfg = "--config " + (dir / "config.json").string();
  ASSERT_EQ(run_cli(cfg + " --record " + (dir / "t.jsonl").string() + " --mode text eval search"), kExitOk);
  EXPECT_EQ(run_cli("replay " + (dir / "out" / "search_report.json").string()), kExitOk);
}

}  // namespace
}  // namespace wmbench
