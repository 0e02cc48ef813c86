#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "wmbench/prompts.hpp"

namespace wmbench {
namespace {

std::string read_asset(const std::string& name) {
  std::ifstream in(std::filesystem::path(WMBENCH_SOURCE_DIR) / "assets" / "prompts" / (name + ".txt"), std::ios::binary);
  EXPECT_TRUE(in.good()) << name;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class TemplateAsset : public ::testing::TestWithParam<std::string_view> {};

TEST_P(TemplateAsset, EmbeddedTextMatchesShippedFileByteForByte) {
  const std::string id(GetParam());
  EXPECT_EQ(read_asset(id), std::string(template_text(id)));
  EXPECT_EQ(template_hashes().at(id), sha256_hex(read_asset(id)));
}

INSTANTIATE_TEST_SUITE_P(All, TemplateAsset,
                         ::testing::Values(template_id::kOptionGeneration, template_id::kActionSelection,
                                           template_id::kTextualTransition, template_id::kJudge,
                                           template_id::kAcsNextAction));

TEST(Templates, UnknownIdIsAConfigError) {
  try {
    template_text("nope");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ConfigError);
  }
}

TEST(Render, TransitionPromptBindsEveryPlaceholderAndPlacesTheImage) {
  TransitionRequest req;
  req.screenshot = {"shot.png", 10, 10};
  req.app_name = "Microsoft Word";
  req.gui_description = "Click the Button \"Bold\".";
  req.action = parse_action(R"({"function":"click","args":{"control_label":3},"status":"CONTINUE"})");
  const auto p = render_transition_prompt(req);
  const std::string t = p.text();
  EXPECT_EQ(t.find("{app_name}"), std::string::npos);
  EXPECT_EQ(t.find("{gui_description}"), std::string::npos);
  EXPECT_EQ(t.find("{action}"), std::string::npos);
  EXPECT_NE(t.find("Microsoft Word"), std::string::npos);
  EXPECT_NE(t.find("<image:shot.png>"), std::string::npos);
  std::size_t images = 0;
  for (const auto& part : p.parts) images += part.kind == PromptPart::Kind::Image;
  EXPECT_EQ(images, 1u);
}

TEST(Render, JudgePromptKeepsBracesInsideTexts) {
  const auto t = render_judge_prompt("pred {with} braces", "gt {{x}}").text();
  EXPECT_NE(t.find("pred {with} braces"), std::string::npos);
  EXPECT_NE(t.find("gt {{x}}"), std::string::npos);
  EXPECT_EQ(t.find("{PRED}"), std::string::npos);
  EXPECT_EQ(t.find("{GT}"), std::string::npos);
}

AgentSelectRequest selection(int n, SearchMode mode) {
  AgentSelectRequest req;
  req.instruction = "Protect the workbook";
  req.screenshot = {"now.png", 4, 4};
  req.mode = mode;
  for (int i = 1; i <= n; ++i) {
    PresentedOption o;
    o.index = i;
    o.candidate.thoughts = "t" + std::to_string(i);
    o.candidate.tool_call = parse_action(R"({"function":"click","args":{"control_label":)" + std::to_string(i) +
                                         R"(},"status":"CONTINUE"})");
    o.predicted_text = "text-" + std::to_string(i);
    o.predicted_image = ImageRef{"img-" + std::to_string(i) + ".png", 4, 4};
    req.options.push_back(o);
  }
  return req;
}

TEST(Render, SelectionPromptListsExactlyNOptions) {
  for (int n : {1, 3, 5, 7}) {
    const auto t = render_selection_prompt(selection(n, SearchMode::None)).text();
    for (int i = 1; i <= n; ++i) EXPECT_NE(t.find("Action Option " + std::to_string(i) + ":"), std::string::npos);
    EXPECT_EQ(t.find("Action Option " + std::to_string(n + 1) + ":"), std::string::npos);
    EXPECT_NE(t.find("between 1 and " + std::to_string(n)), std::string::npos);
    EXPECT_NE(t.find("Protect the workbook"), std::string::npos);
  }
}

TEST(Render, SelectionModesShowOnlyTheirOwnPredictions) {
  const auto none = render_selection_prompt(selection(2, SearchMode::None)).text();
  const auto text = render_selection_prompt(selection(2, SearchMode::Text)).text();
  const auto image = render_selection_prompt(selection(2, SearchMode::Image)).text();
  const auto both = render_selection_prompt(selection(2, SearchMode::ImageText)).text();
  EXPECT_EQ(none.find("text-1"), std::string::npos);
  EXPECT_EQ(none.find("img-1.png"), std::string::npos);
  EXPECT_NE(text.find("text-2"), std::string::npos);
  EXPECT_EQ(text.find("img-2.png"), std::string::npos);
  EXPECT_EQ(image.find("text-2"), std::string::npos);
  EXPECT_NE(image.find("<image:img-2.png>"), std::string::npos);
  EXPECT_NE(both.find("text-2"), std::string::npos);
  EXPECT_NE(both.find("<image:img-2.png>"), std::string::npos);
  EXPECT_EQ(render_selection_prompt(selection(2, SearchMode::Text)).template_id, "action_selection/text");
}

TEST(Render, AcsPromptWithoutScreenshotHasNoImage) {
  AgentActRequest req;
  req.app_name = "Microsoft Excel";
  req.instruction = "Sum column B";
  req.description = "A spreadsheet.";
  const auto p = render_acs_prompt(req);
  for (const auto& part : p.parts) EXPECT_EQ(part.kind, PromptPart::Kind::Text);
  EXPECT_NE(p.text().find("No screenshot is available"), std::string::npos);
  req.screenshot = ImageRef{"s.png", 1, 1};
  EXPECT_NE(render_acs_prompt(req).text().find("<image:s.png>"), std::string::npos);
}

TEST(Render, OptionPromptCarriesCountAndImages) {
  AgentProposeRequest req;
  req.instruction = "Insert a table";
  req.screenshot = {"a.png", 1, 1};
  req.annotated = ImageRef{"b.png", 1, 1};
  req.num_options = 4;
  const auto p = render_option_prompt(req);
  EXPECT_EQ(p.text().find("{num_options}"), std::string::npos);
  EXPECT_NE(p.text().find("<image:a.png>"), std::string::npos);
  EXPECT_NE(p.text().find("<image:b.png>"), std::string::npos);
}

}  // namespace
}  // namespace wmbench
