#pragma once

// Synthetic workspaces for demos and tests: frames, manifests, provider
// fixtures and a config that ties them together. Everything is generated
// from fixed seeds, so two builds of the same workspace are byte-identical.

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "wmbench/action.hpp"
#include "wmbench/image.hpp"
#include "wmbench/report.hpp"
#include "wmbench/reward.hpp"

namespace wmbench::synthetic {

namespace fs = std::filesystem;
using json = nlohmann::json;

/// Blocky noise; distinct seeds give distinct frames.
inline Image pattern_image(int width, int height, std::uint64_t seed) {
  Image img(width, height);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> byte(0, 255);
  const int block = 4;
  for (int by = 0; by < height; by += block) {
    for (int bx = 0; bx < width; bx += block) {
      const std::array<std::uint8_t, 3> c{static_cast<std::uint8_t>(byte(rng)), static_cast<std::uint8_t>(byte(rng)),
                                          static_cast<std::uint8_t>(byte(rng))};
      for (int y = by; y < std::min(by + block, height); ++y) {
        for (int x = bx; x < std::min(bx + block, width); ++x) {
          for (int ch = 0; ch < 3; ++ch) img.at(x, y, ch) = c[static_cast<std::size_t>(ch)];
        }
      }
    }
  }
  return img;
}

inline void write_json(const fs::path& path, const json& j) { write_text_file(path, j.dump(2) + "\n"); }

inline void write_jsonl(const fs::path& path, const std::vector<json>& lines) {
  JsonlWriter w(path);
  for (const auto& l : lines) w.write(l);
}

inline json click_on(std::int64_t label, const std::string& type, const std::string& text) {
  return {{"function", "click"},
          {"args", {{"control_label", label}, {"control_info", {{"control_type", type}, {"control_text", text}}}}},
          {"status", "CONTINUE"}};
}

// ---------------------------------------------------------------------------
// Split-count manifests

/// counts[split][app], splits in train / validation / test order and apps in
/// Word / Excel / PowerPoint order.
using SplitCounts = std::array<std::array<std::size_t, 3>, 3>;

inline constexpr SplitCounts kReferenceSplitCounts{{{797, 997, 1082}, {40, 31, 27}, {119, 96, 124}}};

struct SplitManifestSpec {
  SplitCounts counts = kReferenceSplitCounts;
  std::size_t unchanged_frames = 0;  ///< Extra records whose frames are identical.
  std::size_t invalid_actions = 0;   ///< Extra records whose action fails the schema.
  int width = 32;
  int height = 18;
};

struct SplitManifestFiles {
  fs::path manifest;
  fs::path image_root;
  std::vector<std::string> unchanged_ids;
  std::vector<std::string> invalid_ids;
};

/// Admitted records share one changed frame pair; rejected records are
/// interleaved so filtering cannot rely on position.
inline SplitManifestFiles write_split_manifest(const fs::path& dir, const SplitManifestSpec& spec = {}) {
  fs::create_directories(dir / "frames");
  save_png(pattern_image(spec.width, spec.height, 1), dir / "frames" / "before.png");
  save_png(pattern_image(spec.width, spec.height, 2), dir / "frames" / "after.png");

  const char* apps[] = {"Word", "Excel", "PowerPoint"};
  const char* splits[] = {"train", "validation", "test"};
  std::vector<json> lines;
  SplitManifestFiles files{dir / "manifest.jsonl", dir, {}, {}};
  auto base = [&](const std::string& id, std::size_t s, std::size_t a) {
    return json{{"record_id", id},
                {"app", apps[a]},
                {"split", splits[s]},
                {"instruction", "Apply the requested formatting"},
                {"before", "frames/before.png"},
                {"after", "frames/after.png"},
                {"action", click_on(3, "Button", "Bold")},
                {"gt_transition_text", "The Bold button is highlighted and the selected text turns bold."}};
  };
  std::size_t serial = 0;
  std::size_t unchanged_left = spec.unchanged_frames, invalid_left = spec.invalid_actions;
  for (std::size_t s = 0; s < 3; ++s) {
    for (std::size_t a = 0; a < 3; ++a) {
      for (std::size_t k = 0; k < spec.counts[s][a]; ++k) {
        lines.push_back(base(std::string(splits[s]) + "-" + apps[a] + "-" + std::to_string(k), s, a));
        if (++serial % 97 == 0 && unchanged_left > 0) {
          auto j = base("dup-" + std::to_string(unchanged_left), s, a);
          j["after"] = "frames/before.png";
          files.unchanged_ids.push_back(j["record_id"]);
          lines.push_back(std::move(j));
          --unchanged_left;
        }
        if (serial % 89 == 0 && invalid_left > 0) {
          auto j = base("bad-" + std::to_string(invalid_left), s, a);
          j["action"] = {{"function", "click"}, {"args", json::object()}, {"status", "PAUSED"}};
          files.invalid_ids.push_back(j["record_id"]);
          lines.push_back(std::move(j));
          --invalid_left;
        }
      }
    }
  }
  for (; unchanged_left > 0; --unchanged_left) {
    auto j = base("dup-" + std::to_string(unchanged_left), 0, 0);
    j["after"] = "frames/before.png";
    files.unchanged_ids.push_back(j["record_id"]);
    lines.push_back(std::move(j));
  }
  for (; invalid_left > 0; --invalid_left) {
    auto j = base("bad-" + std::to_string(invalid_left), 0, 0);
    j["action"] = {{"function", "click"}, {"args", json::object()}, {"status", "PAUSED"}};
    files.invalid_ids.push_back(j["record_id"]);
    lines.push_back(std::move(j));
  }
  write_jsonl(files.manifest, lines);
  return files;
}

// ---------------------------------------------------------------------------
// Action-search workspaces

/// Shared layout of a search workspace: one frame pair, a manifest, textual
/// world-model fixtures, an agent script and a config using a stamped
/// realizer so image modes carry the predicted text inside the image.
struct SearchWorkspace {
  fs::path dir;
  fs::path config;
};

inline json search_config(const std::string& agent_label) {
  return {{"dataset", {{"manifest", "manifest.jsonl"}, {"image_root", "."}, {"split", "test"}, {"resolution", {64, 36}}}},
          {"providers",
           {{"textual_wm", {{"kind", "mock"}, {"fixtures", "wm_fixtures.json"}}},
            {"visual_wm", {{"kind", "mock"}, {"mode", "stamped"}, {"out_dir", "out/realized"}}},
            {"agent", {{"kind", "mock"}, {"script", "agent_script.json"}}}}},
          {"labels", {{"agent", agent_label}}},
          {"search", {{"modes", {"none", "text", "image", "image_text"}}, {"num_options", 3}}},
          {"output_dir", "out"}};
}

inline void write_frames(const fs::path& dir) {
  fs::create_directories(dir / "frames");
  save_png(pattern_image(64, 36, 11), dir / "frames" / "before.png");
  save_png(pattern_image(64, 36, 12), dir / "frames" / "after.png");
}

inline const std::string kProtectTask = "Add password protection to the Excel workbook";

/// One Excel record: the agent proposes clicking a cell coordinate, the
/// Title box, or Protect Workbook; only the last leads toward a password
/// prompt. The selector keys on goal words, which appear in the goal-aligned
/// option's control text and in its predicted transition.
inline SearchWorkspace write_protect_workbook_scenario(const fs::path& dir) {
  write_frames(dir);
  const json coordinate{{"function", "click"}, {"args", {{"coordinate", {412, 300}}}}, {"status", "CONTINUE"}};
  const json title = click_on(14, "Edit", "Title");
  const json protect = click_on(27, "Button", "Protect Workbook");
  write_jsonl(dir / "manifest.jsonl",
              {{{"record_id", "protect-1"},
                {"app", "Excel"},
                {"split", "test"},
                {"instruction", kProtectTask},
                {"before", "frames/before.png"},
                {"after", "frames/after.png"},
                {"action", protect},
                {"a11y",
                 {{{"control_label", 14}, {"control_type", "Edit"}, {"control_text", "Title"}, {"bbox", {100, 40, 300, 60}}},
                  {{"control_label", 27}, {"control_type", "Button"}, {"control_text", "Protect Workbook"}, {"bbox", {900, 80, 980, 120}}}}},
                {"gt_transition_text",
                 "The Protect Structure and Windows dialog opens over the sheet with an empty Password field and OK and Cancel "
                 "buttons."}}});
  write_json(dir / "wm_fixtures.json",
             {{"transitions",
               {{{"record_id", "protect-1"}, {"action", coordinate}, {"text", "Cell E14 becomes the active cell; the Name Box shows E14."}},
                {{"record_id", "protect-1"}, {"action", title}, {"text", "The Title box enters edit mode with a blinking caret."}},
                {{"record_id", "protect-1"},
                 {"action", protect},
                 {"text", "A dialog opens asking for an optional password to protect the workbook structure."}}}}});
  write_json(dir / "agent_script.json",
             {{"records",
               {{"protect-1",
                 {{"candidates",
                   {{{"thoughts", "Select a cell first."}, {"tool_call", coordinate}},
                    {{"thoughts", "Edit the document title."}, {"tool_call", title}},
                    {{"thoughts", "Open the workbook protection options."}, {"tool_call", protect}}}},
                  {"goal_keywords", {"password", "protect workbook"}},
                  {"fallback_index", 1}}}}}});
  write_json(dir / "config.json", search_config("mock-agent"));
  return {dir, dir / "config.json"};
}

/// Hand-countable 20-record dataset. Records 1-4 have the ground truth as
/// option 1, records 5-12 as option 2, records 13-20 never propose it.
/// Record 4's selector always answers out of range. The goal keyword lives
/// only in predicted transitions, so mode none falls back to option 1.
///
///   none:       matches 1-3            -> 3/20, 3/12 without No-GT
///   with a WM:  matches 1-3 and 5-12   -> 11/20, 11/12 without No-GT
struct SearchDatasetExpectation {
  std::size_t records = 20;
  std::size_t no_gt = 8;
  std::size_t matched_none = 3;
  std::size_t matched_wm = 11;
  std::size_t selection_failures = 1;
};

inline SearchWorkspace write_search_dataset(const fs::path& dir) {
  write_frames(dir);
  const char* apps[] = {"Word", "Excel", "PowerPoint"};
  std::vector<json> manifest;
  json transitions = json::array();
  json records = json::object();
  const std::string keyword = "goal state reached";
  for (int i = 1; i <= 20; ++i) {
    const std::string id = "s" + std::string(i < 10 ? "0" : "") + std::to_string(i);
    const json gt = click_on(100 + i, "Button", "Target " + std::to_string(i));
    const json decoy_a = click_on(200 + i, "Button", "Decoy A" + std::to_string(i));
    const json decoy_b = click_on(300 + i, "Button", "Decoy B" + std::to_string(i));
    const json decoy_c = click_on(400 + i, "Button", "Decoy C" + std::to_string(i));
    manifest.push_back({{"record_id", id},
                        {"app", apps[(i - 1) % 3]},
                        {"split", "test"},
                        {"instruction", "Reach the goal state for task " + std::to_string(i)},
                        {"before", "frames/before.png"},
                        {"after", "frames/after.png"},
                        {"action", gt},
                        {"gt_transition_text", "The target control " + std::to_string(i) + " is activated."}});
    json options;
    json good;  // the option whose predicted transition carries the keyword
    if (i <= 4) {
      options = {gt, decoy_a, decoy_b};
      good = gt;
    } else if (i <= 12) {
      options = {decoy_a, gt, decoy_b};
      good = gt;
    } else {
      options = {decoy_a, decoy_b, decoy_c};
      good = decoy_b;
    }
    json cands = json::array();
    for (const auto& o : options) {
      cands.push_back({{"thoughts", "Try this control."}, {"tool_call", o}});
      const bool hit = o == good;
      transitions.push_back({{"record_id", id},
                             {"action", o},
                             {"text", hit ? "The dialog closes and the " + keyword + " message appears."
                                          : "A menu opens with unrelated commands."}});
    }
    json rec{{"candidates", cands}, {"goal_keywords", {keyword}}, {"fallback_index", 1}};
    if (i == 4) rec["selection_raw"] = {"no choice", "{\"action_idx\": 9}"};
    records[id] = rec;
  }
  write_jsonl(dir / "manifest.jsonl", manifest);
  write_json(dir / "wm_fixtures.json", {{"transitions", transitions}});
  write_json(dir / "agent_script.json", {{"records", records}});
  write_json(dir / "config.json", search_config("mock-agent"));
  return {dir, dir / "config.json"};
}

// ---------------------------------------------------------------------------
// Metric-suite workspace

/// Six test records (two per app) with fixtures for the judge, consistency,
/// visual, text-perception and reward suites.
inline SearchWorkspace write_suite_workspace(const fs::path& dir) {
  write_frames(dir);
  struct Rec {
    std::string id, app, instruction, gt_text, wm_text;
    json action;
  };
  const std::vector<Rec> recs{
      {"d1", "Word", "Make the title bold", "The Bold button in the Ribbon is highlighted and the title text is now bold.",
       "The Bold button in the Ribbon is highlighted and the title text is now bold.", click_on(5, "Button", "Bold")},
      {"d2", "Word", "Insert a table", "A Table grid dropdown opens under the Insert tab.",
       "A dropdown opens under the Insert tab.", click_on(9, "Button", "Table")},
      {"d3", "Excel", kProtectTask,
       "The Protect Structure and Windows dialog opens with an empty Password field.",
       "The Protect Structure and Windows dialog opens with an empty Password field.", click_on(27, "Button", "Protect Workbook")},
      {"d4", "Excel", "Sort column A ascending", "Column A is sorted from A to Z and the Sort button is highlighted.",
       "Column A is sorted and the sheet scrolls to the top.", click_on(31, "Button", "Sort A to Z")},
      {"d5", "PowerPoint", "Add a new slide", "A new blank slide appears below the current slide in the thumbnail pane.",
       "A new blank slide appears below the current slide in the thumbnail pane.", click_on(6, "Button", "New Slide")},
      {"d6", "PowerPoint", "Apply a fade transition", "The Fade transition is applied and its thumbnail is outlined.",
       "Nothing visible changes.", click_on(44, "Button", "Fade")},
  };
  std::vector<json> manifest;
  json transitions = json::array();
  for (const auto& r : recs) {
    manifest.push_back({{"record_id", r.id},
                        {"app", r.app},
                        {"split", "test"},
                        {"instruction", r.instruction},
                        {"before", "frames/before.png"},
                        {"after", "frames/after.png"},
                        {"action", r.action},
                        {"a11y", {{{"control_label", r.action["args"]["control_label"]},
                                   {"control_type", "Button"},
                                   {"control_text", r.action["args"]["control_info"]["control_text"]},
                                   {"bbox", {200, 40, 260, 80}}}}},
                        {"gt_transition_text", r.gt_text}});
    transitions.push_back({{"record_id", r.id}, {"text", r.wm_text}});
  }
  write_jsonl(dir / "manifest.jsonl", manifest);
  write_json(dir / "wm_fixtures.json", {{"transitions", transitions}});

  // The consistency agent acts on keywords in whatever description it sees.
  // d2's world-model text drops "Table" and d4's drops "Sort button", so
  // those pairs agree on function and status only; d6's yields no action.
  json rules = json::array();
  for (const auto& [needle, label, text] : std::vector<std::tuple<std::string, int, std::string>>{
           {"Bold", 5, "Bold"}, {"Table", 9, "Table"}, {"dropdown", 7, "Insert"}, {"Password", 27, "Protect Workbook"},
           {"Sort button", 31, "Sort A to Z"}, {"sorted", 30, "Sort Z to A"}, {"new blank slide", 6, "New Slide"},
           {"Fade", 44, "Fade"}}) {
    rules.push_back({{"contains", needle}, {"action", click_on(label, "Button", text)}});
  }
  write_json(dir / "agent_script.json", {{"act_rules", rules}, {"default_act", {{"raw", "I am not sure what to do."}}}});

  // Parsed screen text per record and side, for text perception.
  std::vector<json> parsed;
  const std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>> texts{
      {{"Home", "Insert", "Bold"}, {"Home", "Insert", "Bold"}},
      {{"Insert", "Table"}, {"Insert"}},
      {{"Protect Structure", "Password", "OK"}, {"Protect Structure", "Password", "OK", "Cancel"}},
      {{"Data", "Sort"}, {"Data", "Filter"}},
      {{"Slide 2", "New Slide"}, {"Slide 2", "New Slide"}},
      {{}, {"Transitions", "Fade"}},
  };
  for (std::size_t i = 0; i < recs.size(); ++i) {
    parsed.push_back({{"record_id", recs[i].id}, {"source", "pred"}, {"texts", texts[i].first}});
    parsed.push_back({{"record_id", recs[i].id}, {"source", "gt"}, {"texts", texts[i].second}});
  }
  write_jsonl(dir / "parsed_texts.jsonl", parsed);

  // Perceptual and distribution features per record and side.
  std::vector<json> features;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const double t = static_cast<double>(i);
    for (const char* side : {"pred", "gt"}) {
      const double d = std::string(side) == "pred" ? 0.1 * t : 0.0;
      features.push_back({{"record_id", recs[i].id},
                          {"source", side},
                          {"fid", {t + d, 2.0 * t, 1.0 - t + d}},
                          {"lpips", {{{"height", 1}, {"width", 2}, {"channels", 2}, {"data", {1.0, d, 1.0 - d, 1.0}}, {"weights", {1.0, 0.5}}}}}});
    }
  }
  write_jsonl(dir / "features.jsonl", features);

  // Reward groups: K = 4 with fixture verdicts, plus one group the judge scores.
  auto verdict = [](double s) {
    json scores = json::object();
    for (auto a : kJudgeAspects) scores[std::string(a)] = s;
    return json{{"scores", scores}};
  };
  const std::string gt = "The Bold button is highlighted and the selected title text is now bold.";
  write_jsonl(dir / "reward_groups.jsonl",
              {{{"record_id", "d1"},
                {"gt", gt},
                {"samples",
                 {{{"pred", gt}, {"verdict", verdict(1.0)}},
                  {{"pred", "The title is bold."}, {"verdict", verdict(0.5)}},
                  {{"pred", "Nothing happens."}, {"verdict", verdict(0.0)}},
                  {{"pred", gt + " " + gt}, {"verdict", verdict(1.0)}}}}},
               {{"record_id", "d3"},
                {"gt", recs[2].gt_text},
                {"samples",
                 {{{"pred", recs[2].gt_text}},
                  {{"pred", "A dialog opens with an empty Password field."}},
                  {{"pred", "The sheet is unchanged."}}}}}});

  json cfg{{"dataset", {{"manifest", "manifest.jsonl"}, {"image_root", "."}, {"split", "test"}, {"resolution", {64, 36}}}},
           {"providers",
            {{"textual_wm", {{"kind", "mock"}, {"fixtures", "wm_fixtures.json"}}},
             {"visual_wm", {{"kind", "mock"}, {"mode", "oracle"}}},
             {"judge", {{"kind", "mock"}}},
             {"embedder", {{"kind", "mock"}, {"vocabulary", "auto"}}},
             {"agent", {{"kind", "mock"}, {"script", "agent_script.json"}}}}},
           {"labels", {{"model", "mock-wm"}, {"agent", "mock-agent"}, {"method", "mock-realizer"}}},
           {"visual", {{"features", "features.jsonl"}}},
           {"trs", {{"parsed_texts", "parsed_texts.jsonl"}}},
           {"reward", {{"samples", "reward_groups.jsonl"}}},
           {"output_dir", "out"}};
  write_json(dir / "config.json", cfg);
  return {dir, dir / "config.json"};
}

}  // namespace wmbench::synthetic
