// Acceptance runner: one PASS/FAIL line per criterion, non-zero exit if any
// criterion fails. Checks are independent of the unit-test binaries.

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <limits>
#include <numeric>
#include <sstream>

#include "oracles.hpp"
#include "wmbench/cli/commands.hpp"
#include "wmbench/synthetic.hpp"

namespace {

using namespace wmbench;
namespace fs = std::filesystem;
using nlohmann::json;

/// Thrown by `check` with the failing condition.
struct Miss {
  std::string what;
};

void check(bool ok, const std::string& what) {
  if (!ok) throw Miss{what};
}

void near(double got, double want, double tol, const std::string& what) {
  std::ostringstream s;
  s << what << ": got " << got << ", want " << want << " +- " << tol;
  check(std::fabs(got - want) <= tol, s.str());
}

template <typename Fn>
Errc error_code(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  throw Miss{"expected an error"};
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void length_penalty_suite() {
  const auto t0 = std::chrono::steady_clock::now();
  check(length_penalty(100, 100) == 0.0, "penalty(100,100)");
  near(length_penalty(50, 100), 1.0 / 3.0, 1e-12, "penalty(50,100)");
  check(length_penalty(300, 100) == 1.0, "penalty(300,100)");
  check(length_interval(1) == LengthInterval{1, 2}, "interval(1)");
  for (long gt = 1; gt <= 200; ++gt) {
    const auto iv = length_interval(gt);
    double prev_below = 2.0, prev_above = -1.0;
    for (long pred = 0; pred <= 500; ++pred) {
      const double p = length_penalty(pred, gt);
      check(p == testing::penalty_oracle(pred, gt), "oracle mismatch at " + std::to_string(pred) + "/" + std::to_string(gt));
      if (pred >= iv.l_min && pred <= iv.l_max) {
        check(p == 0.0, "nonzero inside interval");
      } else if (pred < iv.l_min) {
        check(p <= prev_below, "not monotone below interval");
        prev_below = p;
      } else {
        check(p >= prev_above, "not monotone above interval");
        prev_above = p;
      }
    }
  }
  check(seconds_since(t0) < 1.0, "sweep took longer than 1 s");
}

void judge_aggregation() {
  check(judge_score(uniform_verdict(1.0)) == 1.0, "all-1 verdict");
  auto v = uniform_verdict(0.0);
  v.scores["main_editing_area"] = 1.0;
  near(judge_score(v), 0.1875, 1e-12, "single main_editing_area");
  double total = 0.0;
  for (const auto& [k, w] : AspectWeights{}.weight) total += w;
  near(total, 8.0, 1e-12, "weight sum");
  for (double bad : {0.7, 0.25, -1.0, 2.0}) {
    auto doc = verdict_to_json(uniform_verdict(1.0));
    doc["scores"]["ribbon"] = bad;
    check(error_code([&] { parse_verdict(doc.dump()); }) == Errc::InvalidVerdict, "accepted score " + std::to_string(bad));
  }
  testing::Gen gen(99);
  for (int i = 0; i < 10000; ++i) {
    const auto r = gen.verdict();
    double lo = 1.0, hi = 0.0;
    for (const auto& [k, s] : r.scores) {
      lo = std::min(lo, s);
      hi = std::max(hi, s);
    }
    const double s = judge_score(r);
    check(s >= lo - 1e-15 && s <= hi + 1e-15, "bounding property");
  }
}

void acs_suite() {
  std::set<double> seen;
  for (int mask = 0; mask < 8; ++mask) seen.insert(weighted_instance_score(mask & 1, mask & 2, mask & 4));
  check(seen == std::set<double>{0.0, 0.25, 0.5, 0.75, 1.0}, "instance score values");
  const auto gt = testing::coordinate_click(400, 300);
  check(match_actions(testing::coordinate_click(425, 275), gt).args_match, "delta 25 must pass");
  check(!match_actions(testing::coordinate_click(426, 300), gt).args_match, "delta 26 must fail");
  check(!match_actions(testing::coordinate_click(400, 274), gt).args_match, "delta 26 must fail (y)");
  TargetGeometry g;
  g.gt_bbox = BoundingBox{300, 250, 600, 350};
  check(match_actions(testing::coordinate_click(590, 340), gt, g).args_match, "point inside bbox");
  check(!match_actions(testing::coordinate_click(601, 340), gt, g).args_match, "point outside bbox");
  testing::Gen gen(1234);
  const auto pairs = testing::acs_fixture(gen, 100);
  check(action_consistency_score(pairs) == testing::acs_oracle(pairs), "100-pair mean differs from brute force");
}

void visual_metrics() {
  const auto t0 = std::chrono::steady_clock::now();
  testing::Gen gen(2024);
  const auto a = testing::random_tensor(gen, 16, 16);
  check(psnr(a, a) == std::numeric_limits<double>::infinity(), "PSNR identical");
  near(psnr(testing::constant_tensor(8, 8, 0.0), testing::constant_tensor(8, 8, 255.0)), 0.0, 1e-9, "PSNR 0 vs 255");
  for (int i = 0; i < 50; ++i) {
    const auto [p, q] = testing::ssim_pair(gen, i);
    near(ssim(p, q, WindowConfig::uniform()), testing::naive_ssim(p, q, 8), 1e-6, "SSIM vs naive " + std::to_string(i));
  }
  near(frechet_distance(testing::moments_1d(0, 1), testing::moments_1d(1, 4)), 2.0, 1e-9, "Frechet 1-D");
  for (int i = 0; i < 1000; ++i) {
    const int d = gen.uniform(1, 6);
    const auto x = testing::random_moments(gen, d), y = testing::random_moments(gen, d);
    const double xy = frechet_distance(x, y);
    check(xy >= 0.0, "Frechet negative");
    near(xy, frechet_distance(y, x), 1e-9 * std::max(1.0, xy), "Frechet symmetry");
  }
  for (int trial = 0; trial < 20; ++trial) {
    const int d = gen.uniform(1, 5), n = gen.uniform(2, 200);
    std::vector<std::vector<double>> xs(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(d)));
    for (auto& x : xs)
      for (auto& v : x) v = gen.real(-10.0, 10.0);
    const auto m = compute_moments(xs), o = testing::welford_moments(xs);
    check((m.mean - o.mean).cwiseAbs().maxCoeff() <= 1e-9, "moments mean");
    check((m.cov - o.cov).cwiseAbs().maxCoeff() <= 1e-9, "moments covariance");
  }
  check(seconds_since(t0) < 30.0, "visual checks took longer than 30 s");
}

void trs_suite() {
  MockEmbedder e(testing::one_hot_vocabulary());
  check(text_perception_breakdown({}, {}, e).score == 1.0, "TRS(empty, empty)");
  check(text_perception_breakdown(TextSet{{"aa"}}, {}, e).score == 0.0, "TRS(P, empty)");
  check(text_perception_breakdown(TextSet{{"aa", "bb"}}, TextSet{{"aa"}}, e).score == 0.75, "{a,b} x {a}");
  const auto words = testing::one_hot_vocabulary();
  testing::Gen gen(31);
  for (int trial = 0; trial < 1000; ++trial) {
    auto p = testing::random_text_set(gen, words), g = testing::random_text_set(gen, words);
    const double pg = text_perception_breakdown(TextSet{p}, TextSet{g}, e).score;
    check(pg == text_perception_breakdown(TextSet{g}, TextSet{p}, e).score, "symmetry");
    std::shuffle(p.begin(), p.end(), gen.engine());
    std::shuffle(g.begin(), g.end(), gen.engine());
    near(text_perception_breakdown(TextSet{p}, TextSet{g}, e).score, pg, 1e-15, "permutation invariance");
  }
}

void reward_suite() {
  const std::vector<double> zero_one{0.0, 1.0};
  const auto a = group_advantages(zero_one);
  near(a[0], -1.0, 1e-6, "advantage of 0");
  near(a[1], 1.0, 1e-6, "advantage of 1");
  testing::Gen gen(5);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<double> r(static_cast<std::size_t>(gen.uniform(2, 12)));
    for (auto& x : r) x = gen.real(-2.0, 2.0);
    const auto adv = group_advantages(r);
    near(std::accumulate(adv.begin(), adv.end(), 0.0), 0.0, 1e-9, "advantages sum");
    const double shift = gen.real(-5.0, 5.0);
    auto shifted = r;
    for (auto& x : shifted) x += shift;
    const auto b = group_advantages(shifted);
    for (std::size_t i = 0; i < adv.size(); ++i) near(adv[i], b[i], 1e-6, "shift invariance");
  }
  LengthPenaltyConfig cfg;
  cfg.beta = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double j = judge_score(gen.verdict());
    check(composite_reward(j, length_penalty(gen.uniform(0, 300), gen.uniform(1, 100), cfg), cfg) == j, "beta = 0");
  }
}

std::vector<TransitionRecord> load_records(const fs::path& dir) {
  IngestOptions o;
  o.target = {64, 36};
  return ingest(dir / "manifest.jsonl", dir, o).records;
}

ProviderSet search_providers(const fs::path& dir, const fs::path& transcript) {
  return build_providers(synthetic::search_config("mock-agent")["providers"], dir, {transcript, std::nullopt});
}

void planner_suite() {
  testing::TempDir dir;
  const auto protect = dir / "protect";
  synthetic::write_protect_workbook_scenario(protect);
  const auto records = load_records(protect);
  for (SearchMode mode : {SearchMode::None, SearchMode::Text, SearchMode::Image, SearchMode::ImageText}) {
    auto p = search_providers(protect, protect / "t.jsonl");
    const auto out = run_action_search(records.at(0), p, {mode, 3, 2});
    const std::string m(to_string(mode));
    check(out.selected_idx == 3 && out.breakdown.overall_match, "protect workbook not selected in mode " + m);
    if (mode == SearchMode::None) check(p.transcript->count(role::kTextualWm) == 0, "mode none called the world model");
  }

  const auto ds = dir / "search";
  synthetic::write_search_dataset(ds);
  const auto recs = load_records(ds);
  const synthetic::SearchDatasetExpectation want;
  for (SearchMode mode : {SearchMode::None, SearchMode::ImageText}) {
    auto live = search_providers(ds, ds / "t.jsonl");
    const auto out = run_search_batch(recs, live, {mode, 3, 1}, 4);
    const std::size_t matched = mode == SearchMode::None ? want.matched_none : want.matched_wm;
    const auto all = aggregate_task_score(out, false), kept = aggregate_task_score(out, true);
    check(all.matched == matched && all.denominator == want.records, "20-record proportion");
    check(kept.denominator == want.records - want.no_gt && kept.excluded == want.no_gt, "exclusion denominator");
    auto replay = build_providers(json::object(), ds, {std::nullopt, ds / "t.jsonl"});
    const auto again = run_search_batch(recs, replay, {mode, 3, 1}, 4);
    for (std::size_t i = 0; i < out.size(); ++i) {
      check(search_outcome_to_json(out[i]) == search_outcome_to_json(again[i]), "replay differs");
    }
  }

  std::vector<SearchOutcome> v(339);
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i].gt_in_candidates = i >= 159;
    v[i].breakdown.overall_match = i >= 159 && i % 2 == 0;
  }
  const auto kept = aggregate_task_score(v, true);
  check(kept.denominator == 180 && kept.excluded == 159, "339 - 159 = 180");
}

void dataset_suite() {
  testing::TempDir dir;
  const auto files = synthetic::write_split_manifest(dir.path(), {synthetic::kReferenceSplitCounts, 7, 5, 32, 18});
  IngestOptions o;
  o.target = {32, 18};
  o.jobs = 4;
  const auto r = ingest(files.manifest, files.image_root, o);
  for (Split s : kSplits) {
    for (App a : kApps) {
      const auto want = synthetic::kReferenceSplitCounts[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)];
      check(r.manifest.count(s, a) == want,
            std::string(to_string(s)) + "/" + std::string(to_string(a)) + " count " + std::to_string(r.manifest.count(s, a)));
    }
  }
  std::vector<std::string> unchanged, invalid;
  for (const auto& rej : r.rejections) {
    if (rej.reason == reject_reason::kUnchangedFrame) unchanged.push_back(rej.record_id);
    if (rej.reason == reject_reason::kInvalidAction) invalid.push_back(rej.record_id);
  }
  check(unchanged == files.unchanged_ids, "unchanged-frame rejections");
  check(invalid == files.invalid_ids, "invalid-action rejections");
  o.jobs = 1;
  const auto again = ingest(files.manifest, files.image_root, o);
  check(again.manifest == r.manifest && again.rejections == r.rejections, "ingestion not deterministic");
}

std::vector<std::string> header_cells(const std::string& summary, std::size_t line = 0) {
  std::stringstream ss(summary);
  std::string l;
  for (std::size_t i = 0; i <= line; ++i) std::getline(ss, l);
  std::vector<std::string> out;
  std::stringstream cs(l);
  for (std::string c; std::getline(cs, c, '|');) out.emplace_back(trim_ascii(c));
  return out;
}

void report_conformance() {
  testing::TempDir dir;
  synthetic::write_suite_workspace(dir.path());
  cli::Overrides o;
  o.config = dir / "config.json";
  const auto ctx = cli::make_context(o);
  check(header_cells(cli::cmd_eval("judge", ctx).summary) == std::vector<std::string>{"Model", "mock-wm"}, "judge header");
  check(header_cells(cli::cmd_eval("acs", ctx).summary) == table_schema::kAcs, "acs header");
  check(header_cells(cli::cmd_eval("visual", ctx).summary) == table_schema::kVisual, "visual header");
  check(header_cells(cli::cmd_eval("trs", ctx).summary, 1) == table_schema::kTrs, "text perception header");

  const auto ws = dir / "search";
  synthetic::write_search_dataset(ws);
  cli::Overrides so;
  so.config = ws / "config.json";
  so.mode = "none";
  check(header_cells(cli::cmd_eval("search", cli::make_context(so)).summary) == table_schema::kSearch, "search header");
  so.exclude_no_gt = true;
  check(header_cells(cli::cmd_eval("search", cli::make_context(so)).summary) == table_schema::kSearchNoGt, "search no-gt header");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void()>>> criteria{
      {"length penalty suite", length_penalty_suite},
      {"judge aggregation", judge_aggregation},
      {"action consistency suite", acs_suite},
      {"visual metrics", visual_metrics},
      {"text perception suite", trs_suite},
      {"reward and advantage", reward_suite},
      {"planner end-to-end on mocks", planner_suite},
      {"dataset pipeline", dataset_suite},
      {"report conformance", report_conformance},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    std::string why;
    try {
      fn();
    } catch (const Miss& m) {
      why = m.what;
    } catch (const std::exception& e) {
      why = std::string("unexpected exception: ") + e.what();
    }
    if (why.empty()) {
      std::cout << "PASS " << name << "\n";
    } else {
      ++failed;
      std::cout << "FAIL " << name << ": " << why << "\n";
    }
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}
