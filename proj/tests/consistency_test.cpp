#include <set>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "wmbench/a11y.hpp"
#include "wmbench/consistency.hpp"

namespace wmbench {
namespace {

ActionCall click_at(std::int64_t x, std::int64_t y, ActionStatus s = ActionStatus::Continue) {
  ActionCall a;
  a.function = "click";
  a.args.set_coordinate({x, y});
  a.status = s;
  return a;
}

TEST(InstanceScore, TakesExactlyFiveValues) {
  std::set<double> seen;
  for (int mask = 0; mask < 8; ++mask) seen.insert(weighted_instance_score(mask & 1, mask & 2, mask & 4));
  EXPECT_EQ(seen, (std::set<double>{0.0, 0.25, 0.5, 0.75, 1.0}));
}

TEST(InstanceScore, ReachedThroughMatching) {
  const auto gt = click_at(100, 100);
  EXPECT_EQ(match_actions(gt, gt).instance_score, 1.0);
  EXPECT_EQ(match_actions(click_at(100, 100, ActionStatus::Finish), gt).instance_score, 0.75);
  EXPECT_EQ(match_actions(click_at(500, 500), gt).instance_score, 0.5);
  auto typed = click_at(500, 500, ActionStatus::Finish);
  typed.function = "type";
  EXPECT_EQ(match_actions(typed, gt).instance_score, 0.0);
  auto wrong_fn = click_at(500, 500);
  wrong_fn.function = "type";
  EXPECT_EQ(match_actions(wrong_fn, gt).instance_score, 0.25);
}

TEST(CoordinateTolerance, BoundaryIsInclusiveAt25) {
  const auto gt = click_at(400, 300);
  EXPECT_TRUE(match_actions(click_at(425, 300), gt).args_match);
  EXPECT_TRUE(match_actions(click_at(375, 325), gt).args_match);
  EXPECT_TRUE(match_actions(click_at(425, 275), gt).args_match);
  EXPECT_FALSE(match_actions(click_at(426, 300), gt).args_match);
  EXPECT_FALSE(match_actions(click_at(400, 274), gt).args_match);
  EXPECT_FALSE(match_actions(click_at(374, 326), gt).args_match);
}

TEST(CoordinateTolerance, DragEndpointsUseTheSameRule) {
  auto drag = [](Point s, Point e) {
    ActionCall a;
    a.function = "drag";
    a.args.set_start_coordinate(s).set_end_coordinate(e);
    return a;
  };
  const auto gt = drag({10, 10}, {200, 200});
  EXPECT_TRUE(match_actions(drag({35, 10}, {200, 175}), gt).args_match);
  EXPECT_FALSE(match_actions(drag({36, 10}, {200, 200}), gt).args_match);
}

TEST(BoundingBox, ContainmentPassesBeyondTolerance) {
  const auto gt = click_at(400, 300);
  TargetGeometry g;
  g.gt_bbox = BoundingBox{300, 250, 600, 350};
  EXPECT_TRUE(match_actions(click_at(590, 340), gt, g).args_match);
  EXPECT_TRUE(match_actions(click_at(300, 250), gt, g).args_match);
  EXPECT_FALSE(match_actions(click_at(601, 340), gt, g).args_match);
  EXPECT_FALSE(match_actions(click_at(590, 351), gt, g).args_match);
}

TEST(BoundingBox, LabelledTargetAcceptsPointInItsBox) {
  ActionCall gt;
  gt.function = "click";
  gt.args.set_control_label(27).set_control_info("Button", "Protect Workbook");
  const std::vector<A11yElement> a11y{{27, "Button", "Protect Workbook", BoundingBox{900, 80, 980, 120}}};
  const auto g = geometry_for(gt, a11y);
  ASSERT_TRUE(g.gt_bbox.has_value());
  EXPECT_TRUE(match_actions(click_at(950, 100), gt, g).args_match);
  EXPECT_FALSE(match_actions(click_at(850, 100), gt, g).args_match);
}

TEST(Args, LabelsAndExtrasMatchExactly) {
  ActionCall gt;
  gt.function = "click";
  gt.args.set_control_label(4).set("button", "left");
  ActionCall pred = gt;
  EXPECT_TRUE(match_actions(pred, gt).args_match);
  pred.args.set("button", "right");
  EXPECT_FALSE(match_actions(pred, gt).args_match);
  pred = gt;
  pred.args.set_control_label(5);
  EXPECT_FALSE(match_actions(pred, gt).args_match);
  pred = gt;
  pred.args.set("zoom_level", 2);
  EXPECT_FALSE(match_actions(pred, gt).args_match);
}

TEST(Args, StatusComparisonIsExact) {
  EXPECT_FALSE(match_actions(click_at(1, 1, ActionStatus::Finish), click_at(1, 1)).status_match);
}

TEST(ScorePair, InvalidSideScoresZero) {
  EXPECT_EQ(score_pair({std::nullopt, click_at(1, 1), {}}).instance_score, 0.0);
  EXPECT_EQ(score_pair({click_at(1, 1), std::nullopt, {}}).instance_score, 0.0);
  EXPECT_EQ(score_pair({std::nullopt, std::nullopt, {}}).instance_score, 0.0);
}

TEST(ActionConsistencyScore, EmptyIsAnError) {
  EXPECT_THROW(action_consistency_score({}), Error);
}

TEST(ActionConsistencyScore, MatchesBruteForceOnSyntheticFixture) {
  testing::Gen gen(1234);
  const auto pairs = testing::acs_fixture(gen, 100);
  EXPECT_EQ(action_consistency_score(pairs), testing::acs_oracle(pairs));
}

TEST(Breakdown, CsvRowQuotesRecordIds) {
  const MatchBreakdown b{true, true, false, false, 0.5};
  EXPECT_EQ(breakdown_to_csv_row("r,1", b), "\"r,1\",1,1,0,0,0.5");
}

}  // namespace
}  // namespace wmbench
