#pragma once

// Command implementations behind the wmbench executable. Each command
// resolves its effective configuration (flag > config file > default), runs,
// writes per-sample JSONL plus a rendered summary, and returns a RunReport
// whose aggregates are recomputable from those files.

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wmbench/consistency.hpp"
#include "wmbench/dataset.hpp"
#include "wmbench/digest.hpp"
#include "wmbench/error.hpp"
#include "wmbench/parallel.hpp"
#include "wmbench/planner.hpp"
#include "wmbench/prompts.hpp"
#include "wmbench/providers/factory.hpp"
#include "wmbench/report.hpp"
#include "wmbench/reward.hpp"
#include "wmbench/text_perception.hpp"
#include "wmbench/visual_metrics.hpp"

namespace wmbench::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitConfig = 2, kExitEmptyDataset = 3 };

inline int exit_code_for(const Error& e) {
  switch (e.code()) {
    case Errc::ConfigError: return kExitConfig;
    case Errc::EmptyDataset: return kExitEmptyDataset;
    default: return kExitFailure;
  }
}

/// Command-line values; unset fields defer to the config file.
struct Overrides {
  std::optional<fs::path> config;
  std::optional<int> jobs;
  std::optional<fs::path> record;
  std::optional<fs::path> replay;
  std::optional<fs::path> out_dir;
  std::optional<bool> exclude_no_gt;
  std::optional<std::string> mode;
  std::optional<int> num_options;
};

inline json default_config() {
  return {{"dataset", {{"manifest", nullptr}, {"image_root", "."}, {"split", "test"}, {"resolution", {1280, 720}}}},
          {"providers", json::object()},
          {"labels", {{"model", nullptr}, {"agent", nullptr}, {"method", nullptr}}},
          {"search", {{"modes", {"none", "text", "image", "image_text"}}, {"num_options", 5}, {"exclude_no_gt", false}}},
          {"visual", {{"window", "uniform"}, {"max_value", 255.0}, {"features", nullptr}, {"lpips_strict", false}}},
          {"trs", {{"parsed_texts", nullptr}, {"min_length", 2}, {"require_alnum", true}}},
          {"judge", {{"predictions", nullptr}}},
          {"reward", {{"samples", nullptr}, {"beta", 1.0}, {"r_low", 0.75}, {"r_up", 1.25}, {"m", 1.0}, {"epsilon", 1e-8}}},
          {"output_dir", "wmbench_out"},
          {"jobs", 1},
          {"record", nullptr},
          {"replay", nullptr}};
}

struct RunContext {
  json config;  ///< Effective configuration, echoed into the report.
  fs::path base_dir;
  fs::path out_dir;
  int jobs = 1;
  TranscriptOptions transcripts;

  fs::path resolve(const json& v) const {
    fs::path p(v.get<std::string>());
    return p.is_absolute() ? p : base_dir / p;
  }
  std::optional<fs::path> optional_path(const json::json_pointer& ptr) const {
    if (!config.contains(ptr) || config.at(ptr).is_null()) return std::nullopt;
    return resolve(config.at(ptr));
  }
};

inline std::vector<std::string> parse_mode_list(const std::string& text) {
  if (text == "all") return {"none", "text", "image", "image_text"};
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    const auto t = std::string(trim_ascii(item));
    if (t.empty()) continue;
    out.emplace_back(to_string(parse_search_mode(t)));
  }
  if (out.empty()) fail(Errc::ConfigError, "--mode names no search mode");
  return out;
}

/// Loads the config file (if any) over the defaults, then applies flags.
/// Relative paths in the file resolve against the file's directory; the
/// resolved directory is stored so a report can be replayed from anywhere.
inline RunContext make_context(const Overrides& o, const std::optional<json>& preset = std::nullopt) {
  json cfg = default_config();
  fs::path base_dir = fs::current_path();
  if (preset) {
    cfg.merge_patch(*preset);
    if (preset->contains("base_dir")) base_dir = preset->at("base_dir").get<std::string>();
  } else if (o.config) {
    cfg.merge_patch(load_json_file(*o.config));
    base_dir = fs::absolute(*o.config).parent_path();
  }
  if (o.jobs) cfg["jobs"] = *o.jobs;
  if (o.record) cfg["record"] = fs::absolute(*o.record).string();
  if (o.replay) cfg["replay"] = fs::absolute(*o.replay).string();
  if (o.out_dir) cfg["output_dir"] = fs::absolute(*o.out_dir).string();
  if (o.exclude_no_gt) cfg["search"]["exclude_no_gt"] = *o.exclude_no_gt;
  if (o.mode) cfg["search"]["modes"] = parse_mode_list(*o.mode);
  if (o.num_options) cfg["search"]["num_options"] = *o.num_options;
  cfg["base_dir"] = base_dir.string();

  RunContext ctx;
  ctx.base_dir = base_dir;
  ctx.config = cfg;
  if (!cfg["jobs"].is_number_integer() || cfg["jobs"].get<int>() < 1) fail(Errc::ConfigError, "jobs must be a positive integer");
  ctx.jobs = cfg["jobs"].get<int>();
  if (cfg["search"]["num_options"].get<int>() < 1) fail(Errc::ConfigError, "num_options must be at least 1");
  ctx.out_dir = ctx.resolve(cfg["output_dir"]);
  if (!cfg["record"].is_null()) ctx.transcripts.record = ctx.resolve(cfg["record"]);
  if (!cfg["replay"].is_null()) ctx.transcripts.replay = ctx.resolve(cfg["replay"]);
  if (ctx.transcripts.record && ctx.transcripts.replay && *ctx.transcripts.record == *ctx.transcripts.replay) {
    fail(Errc::ConfigError, "--record and --replay point at the same file");
  }
  return ctx;
}

inline RunReport new_report(const std::string& command, const RunContext& ctx) {
  RunReport r;
  r.command = command;
  r.config_hash = sha256_hex(canonical_json(ctx.config));
  r.template_hashes = template_hashes();
  r.effective_config = ctx.config;
  const auto now = std::chrono::system_clock::now().time_since_epoch().count();
  r.run_id = sha256_hex(command + r.config_hash + std::to_string(now)).substr(0, 16);
  return r;
}

inline std::string label_or(const RunContext& ctx, const char* key, const std::string& fallback) {
  const auto& v = ctx.config["labels"][key];
  return v.is_string() ? v.get<std::string>() : fallback;
}

inline std::vector<TransitionRecord> load_split(const RunContext& ctx) {
  const auto& d = ctx.config["dataset"];
  if (d["manifest"].is_null()) fail(Errc::ConfigError, "dataset.manifest is not configured");
  IngestOptions io;
  io.jobs = ctx.jobs;
  io.target = Resolution{d["resolution"][0].get<int>(), d["resolution"][1].get<int>()};
  auto result = ingest(ctx.resolve(d["manifest"]), ctx.resolve(d["image_root"]), io);
  const auto split = d["split"].get<std::string>();
  std::vector<TransitionRecord> out;
  if (split == "all") {
    out = std::move(result.records);
  } else {
    auto s = parse_split(split);
    if (!s) fail(Errc::ConfigError, "dataset.split must be train, validation, test or all");
    out = records_in_split(result, *s);
  }
  if (out.empty()) fail(Errc::EmptyDataset, "no admitted records in split '" + split + "'");
  return out;
}

inline ProviderSet providers_for(const RunContext& ctx) {
  return build_providers(ctx.config["providers"], ctx.base_dir, ctx.transcripts, ctx.out_dir);
}

inline TransitionRequest transition_request_for(const TransitionRecord& r) {
  TransitionRequest t;
  t.record_id = r.record_id;
  t.screenshot = r.screenshot_before;
  t.action = r.action;
  t.app_name = app_display_name(r.app);
  t.gui_description = describe_action(r.action);
  return t;
}

struct CommandResult {
  RunReport report;
  std::string summary;
};

inline void finish(CommandResult& res, const RunContext& ctx, const std::string& stem,
                   std::chrono::steady_clock::time_point t0, const ProviderSet* providers = nullptr) {
  const auto summary_path = ctx.out_dir / (stem + "_summary.txt");
  write_text_file(summary_path, res.summary);
  res.report.artifacts.push_back(summary_path.string());
  if (providers) {
    res.report.providers = providers->identities();
    if (ctx.transcripts.record) res.report.artifacts.push_back(ctx.transcripts.record->string());
  }
  res.report.timing = {{"wall_ms", std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count()}};
  const auto report_path = ctx.out_dir / (stem + "_report.json");
  res.report.artifacts.push_back(report_path.string());
  write_text_file(report_path, res.report.to_json().dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// ingest

inline Table split_table(const SplitManifest& m) {
  Table t{table_schema::kSplits, {}, ""};
  const char* names[] = {"Training", "Validation", "Test"};
  std::array<std::size_t, 3> totals{};
  for (Split s : kSplits) {
    std::vector<std::string> row{names[static_cast<std::size_t>(s)]};
    for (App a : kApps) {
      row.push_back(std::to_string(m.count(s, a)));
      totals[static_cast<std::size_t>(a)] += m.count(s, a);
    }
    t.rows.push_back(std::move(row));
  }
  t.rows.push_back({"Total", std::to_string(totals[0]), std::to_string(totals[1]), std::to_string(totals[2])});
  return t;
}

inline CommandResult cmd_ingest(const fs::path& manifest, const fs::path& image_root, const RunContext& ctx,
                                bool strict_images = false) {
  const auto t0 = std::chrono::steady_clock::now();
  CommandResult res{new_report("ingest", ctx), {}};
  IngestOptions io;
  io.jobs = ctx.jobs;
  io.strict_images = strict_images;
  io.target = Resolution{ctx.config["dataset"]["resolution"][0].get<int>(), ctx.config["dataset"]["resolution"][1].get<int>()};
  const IngestResult r = ingest(manifest, image_root, io);

  JsonlWriter admitted(ctx.out_dir / "admitted.jsonl");
  for (const auto& rec : r.records) admitted.write(record_to_json(rec));
  JsonlWriter rejected(ctx.out_dir / "rejections.jsonl");
  std::map<std::string, std::size_t> by_reason;
  for (const auto& rj : r.rejections) {
    rejected.write(json{{"record_id", rj.record_id}, {"reason", rj.reason}});
    ++by_reason[rj.reason];
  }
  res.report.artifacts = {admitted.path().string(), rejected.path().string()};

  json counts = json::object();
  for (Split s : kSplits) {
    for (App a : kApps) counts[std::string(to_string(s))][std::string(to_string(a))] = r.manifest.count(s, a);
  }
  res.report.aggregates = {{"admitted", r.records.size()},
                           {"rejected", r.rejections.size()},
                           {"rejections_by_reason", by_reason},
                           {"split_counts", counts},
                           {"train_total", r.manifest.total(Split::Train)},
                           {"validation_total", r.manifest.total(Split::Validation)},
                           {"test_total", r.manifest.total(Split::Test)}};
  res.summary = split_table(r.manifest).render();
  res.summary += "admitted " + std::to_string(r.records.size()) + ", rejected " + std::to_string(r.rejections.size()) + "\n";
  for (const auto& [reason, n] : by_reason) res.summary += "  " + reason + ": " + std::to_string(n) + "\n";
  finish(res, ctx, "ingest", t0);
  if (r.records.empty()) fail(Errc::EmptyDataset, "manifest admitted no records");
  return res;
}

// ---------------------------------------------------------------------------
// eval judge

inline std::map<std::string, std::string> load_predictions(const fs::path& path) {
  std::map<std::string, std::string> out;
  std::ifstream in(path);
  if (!in) fail(Errc::ConfigError, "cannot open predictions " + path.string());
  for (std::string line; std::getline(in, line);) {
    if (trim_ascii(line).empty()) continue;
    auto j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("record_id") || !j.contains("pred")) fail(Errc::ConfigError, "bad predictions line");
    out[j["record_id"].get<std::string>()] = j["pred"].get<std::string>();
  }
  return out;
}

/// Model output as scored: one fenced block stripped, outer space trimmed.
inline std::string clean_prediction(std::string_view raw) { return std::string(trim_ascii(strip_code_fence(raw))); }

inline CommandResult eval_judge(const RunContext& ctx) {
  const auto t0 = std::chrono::steady_clock::now();
  CommandResult res{new_report("eval judge", ctx), {}};
  const auto records = load_split(ctx);
  const ProviderSet p = providers_for(ctx);
  if (!p.judge) fail(Errc::ConfigError, "eval judge needs a judge provider");
  std::optional<std::map<std::string, std::string>> preds;
  if (auto path = ctx.optional_path("/judge/predictions"_json_pointer)) preds = load_predictions(*path);
  if (!preds && !p.textual_wm) fail(Errc::ConfigError, "eval judge needs textual_wm or judge.predictions");

  struct Row {
    std::string pred;
    std::optional<JudgeVerdict> verdict;
    std::optional<std::string> error;
  };
  std::vector<Row> rows(records.size());
  parallel_for(records.size(), ctx.jobs, [&](std::size_t i) {
    const auto& r = records[i];
    if (preds) {
      auto it = preds->find(r.record_id);
      if (it == preds->end()) {
        rows[i].error = "no prediction for record";
        return;
      }
      rows[i].pred = clean_prediction(it->second);
    } else {
      rows[i].pred = clean_prediction(p.textual_wm->predict_transition(transition_request_for(r)));
    }
    try {
      rows[i].verdict = p.judge->judge_transition(rows[i].pred, r.gt_transition_text);
    } catch (const Error& e) {
      if (e.code() != Errc::InvalidVerdict) throw;
      rows[i].error = e.what();
    }
  });

  JsonlWriter out(ctx.out_dir / "judge_samples.jsonl");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    json j{{"record_id", records[i].record_id}, {"app", std::string(to_string(records[i].app))}, {"pred", rows[i].pred}};
    if (rows[i].verdict) {
      const double s = judge_score(*rows[i].verdict);
      j["judge_score"] = s;
      j["verdict"] = verdict_to_json(*rows[i].verdict);
      sum += s;
      ++n;
    } else {
      j["judge_score"] = nullptr;
      j["error"] = *rows[i].error;
      res.report.tally(rows[i].error->rfind("InvalidVerdict", 0) == 0 ? "InvalidVerdict" : "missing_prediction");
    }
    out.write(j);
  }
  res.report.artifacts.push_back(out.path().string());
  if (n == 0) fail(Errc::EmptyDataset, "no sample received a valid verdict");
  const double score = sum / static_cast<double>(n);
  res.report.aggregates = {{"judge_score", score}, {"scored", n}, {"missing", records.size() - n}};
  const std::string model = label_or(ctx, "model", p.textual_wm ? p.textual_wm->identity() : "predictions");
  Table t{table_schema::kJudge, {}, ""};
  t.header.push_back(model);
  t.rows.push_back({table_schema::kJudgeRow, format_number(score)});
  res.summary = t.render();
  finish(res, ctx, "judge", t0, &p);
  return res;
}

// ---------------------------------------------------------------------------
// eval acs

inline CommandResult eval_acs(const RunContext& ctx) {
  const auto t0 = std::chrono::steady_clock::now();
  CommandResult res{new_report("eval acs", ctx), {}};
  const auto records = load_split(ctx);
  const ProviderSet p = providers_for(ctx);
  if (!p.agent || !p.textual_wm) fail(Errc::ConfigError, "eval acs needs textual_wm and agent providers");

  std::vector<AcsOutcome> outcomes(records.size());
  parallel_for(records.size(), ctx.jobs, [&](std::size_t i) {
    const std::string wm_text = p.textual_wm->predict_transition(transition_request_for(records[i]));
    outcomes[i] = run_acs_protocol(records[i], wm_text, *p.agent);
  });

  std::vector<ActionPair> pairs;
  JsonlWriter out(ctx.out_dir / "acs_samples.jsonl");
  std::string csv = std::string(kBreakdownCsvHeader) + "\n";
  for (const auto& o : outcomes) {
    TargetGeometry g;
    const auto* rec = &*std::find_if(records.begin(), records.end(), [&](const auto& r) { return r.record_id == o.record_id; });
    if (o.a_gt) g = geometry_for(*o.a_gt, rec->a11y);
    pairs.push_back(ActionPair{o.a_wm, o.a_gt, g});
    json j = json::parse(breakdown_to_json(o.record_id, o.breakdown).dump());
    j["a_gt"] = o.a_gt ? json::parse(serialize_action(*o.a_gt)) : json(nullptr);
    j["a_wm"] = o.a_wm ? json::parse(serialize_action(*o.a_wm)) : json(nullptr);
    j["wm_text"] = o.wm_text;
    out.write(j);
    csv += breakdown_to_csv_row(o.record_id, o.breakdown) + "\n";
    if (!o.a_gt) res.report.tally("invalid_action_gt");
    if (!o.a_wm) res.report.tally("invalid_action_wm");
  }
  write_text_file(ctx.out_dir / "acs_breakdown.csv", csv);
  res.report.artifacts = {out.path().string(), (ctx.out_dir / "acs_breakdown.csv").string()};
  const double score = action_consistency_score(pairs);
  res.report.aggregates = {{"acs", score}, {"pairs", pairs.size()}};
  Table t{table_schema::kAcs, {}, ""};
  t.rows.push_back({label_or(ctx, "model", p.textual_wm->identity()), label_or(ctx, "agent", p.agent->identity()), format_number(score)});
  res.summary = t.render();
  finish(res, ctx, "acs", t0, &p);
  return res;
}

// ---------------------------------------------------------------------------
// eval visual

struct FeatureRecord {
  std::optional<std::vector<double>> fid;
  std::optional<FeatureStack> lpips;
};

/// JSONL of {record_id, source: pred|gt, fid: [...], lpips: [{height, width,
/// channels, data, weights}]}.
inline std::map<std::string, std::map<std::string, FeatureRecord>> load_features(const fs::path& path) {
  std::map<std::string, std::map<std::string, FeatureRecord>> out;
  std::ifstream in(path);
  if (!in) fail(Errc::ConfigError, "cannot open features " + path.string());
  for (std::string line; std::getline(in, line);) {
    if (trim_ascii(line).empty()) continue;
    auto j = json::parse(line, nullptr, false);
    if (j.is_discarded()) fail(Errc::ConfigError, "features line is not JSON");
    FeatureRecord& f = out[j.at("record_id").get<std::string>()][j.at("source").get<std::string>()];
    if (j.contains("fid")) f.fid = j["fid"].get<std::vector<double>>();
    if (j.contains("lpips")) {
      FeatureStack s;
      for (const auto& l : j["lpips"]) {
        s.layers.push_back(FeatureLayer{l.at("height").get<int>(), l.at("width").get<int>(), l.at("channels").get<int>(),
                                        l.at("data").get<std::vector<double>>(), l.at("weights").get<std::vector<double>>()});
      }
      f.lpips = std::move(s);
    }
  }
  return out;
}

inline WindowConfig window_from_config(const json& v) {
  const auto kind = v.value("window", std::string("uniform"));
  if (kind == "uniform") return WindowConfig::uniform();
  if (kind == "gaussian") return WindowConfig::gaussian();
  fail(Errc::ConfigError, "visual.window must be uniform or gaussian");
}

inline CommandResult eval_visual(const RunContext& ctx) {
  const auto t0 = std::chrono::steady_clock::now();
  CommandResult res{new_report("eval visual", ctx), {}};
  const auto records = load_split(ctx);
  const ProviderSet p = providers_for(ctx);
  if (!p.visual_wm) fail(Errc::ConfigError, "eval visual needs a visual_wm provider");
  const auto& vc = ctx.config["visual"];
  const WindowConfig window = window_from_config(vc);
  const double max_value = vc.value("max_value", 255.0);
  const Resolution target{ctx.config["dataset"]["resolution"][0].get<int>(), ctx.config["dataset"]["resolution"][1].get<int>()};

  struct Row {
    std::string transition;
    ImageRef predicted;
    double psnr = 0.0;
    double ssim = 0.0;
  };
  std::vector<Row> rows(records.size());
  parallel_for(records.size(), ctx.jobs, [&](std::size_t i) {
    const auto& r = records[i];
    rows[i].transition = p.textual_wm ? p.textual_wm->predict_transition(transition_request_for(r)) : r.gt_transition_text;
    rows[i].predicted = p.visual_wm->realize_state(RealizationRequest{r.record_id, r.screenshot_before, rows[i].transition, r.screenshot_after});
    const auto pred = ImageTensor::from_image(normalize_resolution(load_image(rows[i].predicted.path), target), max_value);
    const auto gt = ImageTensor::from_image(normalize_resolution(load_image(r.screenshot_after.path), target), max_value);
    rows[i].psnr = psnr(pred, gt);
    rows[i].ssim = ssim(pred, gt, window);
  });

  std::optional<std::map<std::string, std::map<std::string, FeatureRecord>>> features;
  if (auto path = ctx.optional_path("/visual/features"_json_pointer)) features = load_features(*path);
  LpipsOptions lo{vc.value("lpips_strict", false)};

  JsonlWriter out(ctx.out_dir / "visual_samples.jsonl");
  double psnr_sum = 0.0, ssim_sum = 0.0, lpips_sum = 0.0;
  std::size_t lpips_n = 0;
  std::vector<std::vector<double>> fid_real, fid_gen;
  for (std::size_t i = 0; i < records.size(); ++i) {
    json j{{"record_id", records[i].record_id},
           {"predicted_image", rows[i].predicted.path},
           {"psnr", number_json(rows[i].psnr)},
           {"ssim", rows[i].ssim}};
    psnr_sum += rows[i].psnr;
    ssim_sum += rows[i].ssim;
    if (features) {
      auto it = features->find(records[i].record_id);
      if (it != features->end() && it->second.count("pred") && it->second.count("gt")) {
        const auto& fp = it->second.at("pred");
        const auto& fg = it->second.at("gt");
        if (fp.lpips && fg.lpips) {
          const double l = lpips_aggregate(*fp.lpips, *fg.lpips, lo);
          j["lpips"] = l;
          lpips_sum += l;
          ++lpips_n;
        }
        if (fp.fid && fg.fid) {
          fid_gen.push_back(*fp.fid);
          fid_real.push_back(*fg.fid);
        }
      } else {
        res.report.tally("missing_features");
      }
    }
    out.write(j);
  }
  res.report.artifacts.push_back(out.path().string());
  const double n = static_cast<double>(records.size());
  std::optional<double> lpips_mean, fid;
  if (lpips_n > 0) lpips_mean = lpips_sum / static_cast<double>(lpips_n);
  if (fid_real.size() >= 2) fid = frechet_distance(compute_moments(fid_real), compute_moments(fid_gen));
  res.report.aggregates = {{"psnr", number_json(psnr_sum / n)},
                           {"ssim", ssim_sum / n},
                           {"lpips", lpips_mean ? json(*lpips_mean) : json(nullptr)},
                           {"fid", fid ? json(*fid) : json(nullptr)},
                           {"samples", records.size()}};
  Table t{table_schema::kVisual, {}, ""};
  t.rows.push_back({label_or(ctx, "method", p.visual_wm->identity()), format_number(psnr_sum / n, 2), format_number(ssim_sum / n, 2),
                    lpips_mean ? format_number(*lpips_mean, 2) : "-", fid ? format_number(*fid, 2) : "-"});
  res.summary = t.render();
  finish(res, ctx, "visual", t0, &p);
  return res;
}

// ---------------------------------------------------------------------------
// eval trs

struct ParsedTexts {
  std::optional<std::vector<std::string>> pred;
  std::optional<std::vector<std::string>> gt;
};

inline std::map<std::string, ParsedTexts> load_parsed_texts(const fs::path& path) {
  std::map<std::string, ParsedTexts> out;
  std::ifstream in(path);
  if (!in) fail(Errc::ConfigError, "cannot open parsed texts " + path.string());
  for (std::string line; std::getline(in, line);) {
    if (trim_ascii(line).empty()) continue;
    auto j = json::parse(line, nullptr, false);
    if (j.is_discarded()) fail(Errc::ConfigError, "parsed-text line is not JSON");
    auto& e = out[j.at("record_id").get<std::string>()];
    const auto source = j.at("source").get<std::string>();
    auto texts = j.at("texts").get<std::vector<std::string>>();
    if (source == "pred") {
      e.pred = std::move(texts);
    } else if (source == "gt") {
      e.gt = std::move(texts);
    } else {
      fail(Errc::ConfigError, "parsed-text source must be pred or gt");
    }
  }
  return out;
}

inline CommandResult eval_trs(const RunContext& ctx) {
  const auto t0 = std::chrono::steady_clock::now();
  CommandResult res{new_report("eval trs", ctx), {}};
  const auto records = load_split(ctx);
  auto path = ctx.optional_path("/trs/parsed_texts"_json_pointer);
  if (!path) fail(Errc::ConfigError, "eval trs needs trs.parsed_texts");
  const auto parsed = load_parsed_texts(*path);
  const TextNormalizeOptions no{ctx.config["trs"].value("min_length", std::size_t{2}), ctx.config["trs"].value("require_alnum", true)};

  // A mock embedder may take its vocabulary from the parsed texts themselves.
  RunContext local = ctx;
  auto& emb_cfg = local.config["providers"]["embedder"];
  if (emb_cfg.is_object() && emb_cfg.value("vocabulary", json()) == "auto") {
    std::vector<std::string> vocab;
    std::set<std::string> seen;
    for (const auto& [id, e] : parsed) {
      for (const auto* side : {&e.pred, &e.gt}) {
        if (!*side) continue;
        for (auto& s : normalize_texts(**side, no).items) {
          if (seen.insert(s).second) vocab.push_back(s);
        }
      }
    }
    emb_cfg["vocabulary"] = vocab;
  }
  const ProviderSet p = providers_for(local);
  if (!p.embedder) fail(Errc::ConfigError, "eval trs needs an embedder provider");

  std::vector<std::optional<TrsBreakdown>> rows(records.size());
  parallel_for(records.size(), ctx.jobs, [&](std::size_t i) {
    auto it = parsed.find(records[i].record_id);
    if (it == parsed.end()) return;
    const std::vector<std::string> none;
    rows[i] = text_perception_breakdown(normalize_texts(it->second.pred.value_or(none), no),
                                        normalize_texts(it->second.gt.value_or(none), no), *p.embedder);
  });

  JsonlWriter out(ctx.out_dir / "trs_samples.jsonl");
  std::array<double, 3> sum{};
  std::array<std::size_t, 3> cnt{};
  double total = 0.0;
  std::size_t total_n = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!rows[i]) {
      res.report.tally("no_parsed_text");
      continue;
    }
    const auto a = static_cast<std::size_t>(records[i].app);
    sum[a] += rows[i]->score;
    ++cnt[a];
    total += rows[i]->score;
    ++total_n;
    out.write(json{{"record_id", records[i].record_id},
                   {"app", std::string(to_string(records[i].app))},
                   {"trs", rows[i]->score},
                   {"pred_to_gt", rows[i]->pred_to_gt ? json(*rows[i]->pred_to_gt) : json(nullptr)},
                   {"gt_to_pred", rows[i]->gt_to_pred ? json(*rows[i]->gt_to_pred) : json(nullptr)},
                   {"pred_items", rows[i]->pred_items},
                   {"gt_items", rows[i]->gt_items}});
  }
  res.report.artifacts.push_back(out.path().string());
  if (total_n == 0) fail(Errc::EmptyDataset, "no record has parsed text");
  auto mean = [&](std::size_t a) -> json { return cnt[a] ? json(sum[a] / static_cast<double>(cnt[a])) : json(nullptr); };
  const double overall = total / static_cast<double>(total_n);
  res.report.aggregates = {{"word", mean(0)}, {"excel", mean(1)}, {"ppt", mean(2)}, {"overall", overall}, {"samples", total_n}};
  Table t{table_schema::kTrs, {}, "Text Perception"};
  std::vector<std::string> row{label_or(ctx, "method", p.embedder->identity())};
  for (std::size_t a = 0; a < 3; ++a) row.push_back(cnt[a] ? format_number(sum[a] / static_cast<double>(cnt[a]), 3) : "-");
  row.push_back(format_number(overall, 3));
  t.rows.push_back(std::move(row));
  res.summary = t.render();
  finish(res, ctx, "trs", t0, &p);
  return res;
}

// ---------------------------------------------------------------------------
// eval search

inline CommandResult eval_search(const RunContext& ctx) {
  const auto t0 = std::chrono::steady_clock::now();
  CommandResult res{new_report("eval search", ctx), {}};
  const auto records = load_split(ctx);
  const ProviderSet p = providers_for(ctx);
  const auto& sc = ctx.config["search"];
  const bool exclude = sc["exclude_no_gt"].get<bool>();
  std::vector<SearchMode> modes;
  for (const auto& m : sc["modes"]) modes.push_back(parse_search_mode(m.get<std::string>()));
  if (modes.empty()) fail(Errc::ConfigError, "search.modes is empty");

  std::map<SearchMode, TaskScore> scores;
  std::optional<std::size_t> no_gt;
  json per_mode = json::object();
  for (SearchMode mode : modes) {
    SearchOptions so{mode, sc["num_options"].get<int>(), 1};
    const auto outcomes = run_search_batch(records, p, so, ctx.jobs);
    JsonlWriter out(ctx.out_dir / ("search_" + std::string(to_string(mode)) + ".jsonl"));
    std::size_t failures = 0, missing_gt = 0, warnings = 0;
    for (const auto& o : outcomes) {
      out.write(search_outcome_to_json(o));
      failures += o.selection_error ? 1 : 0;
      missing_gt += o.gt_in_candidates ? 0 : 1;
      warnings += o.warnings.size();
    }
    res.report.artifacts.push_back(out.path().string());
    if (failures) res.report.tally("SelectionFailure", failures);
    if (warnings) res.report.warnings.push_back(std::string(to_string(mode)) + ": " + std::to_string(warnings) + " short proposals");
    if (!no_gt) {
      no_gt = missing_gt;
    } else if (*no_gt != missing_gt) {
      res.report.warnings.push_back("No-GT count differs in mode " + std::string(to_string(mode)));
    }
    const TaskScore all = aggregate_task_score(outcomes, false);
    json m{{"score", all.score}, {"matched", all.matched}, {"denominator", all.denominator}, {"no_gt", missing_gt}};
    if (exclude) {
      const TaskScore ex = aggregate_task_score(outcomes, true);
      m["excluded_score"] = ex.score;
      m["excluded_denominator"] = ex.denominator;
      m["excluded"] = ex.excluded;
      scores[mode] = ex;
    } else {
      scores[mode] = all;
    }
    per_mode[std::string(to_string(mode))] = m;
  }
  res.report.aggregates = {{"modes", per_mode}, {"no_gt", *no_gt}, {"exclude_no_gt", exclude}, {"samples", records.size()}};

  Table t{exclude ? table_schema::kSearchNoGt : table_schema::kSearch, {}, ""};
  std::vector<std::string> row{label_or(ctx, "agent", p.agent->identity())};
  if (exclude) row.push_back(std::to_string(*no_gt));
  for (SearchMode m : {SearchMode::None, SearchMode::Text, SearchMode::Image, SearchMode::ImageText}) {
    auto it = scores.find(m);
    row.push_back(it == scores.end() ? "-" : format_number(it->second.score));
  }
  t.rows.push_back(std::move(row));
  res.summary = t.render();
  finish(res, ctx, "search", t0, &p);
  return res;
}

// ---------------------------------------------------------------------------
// reward

struct RewardSampleInput {
  std::string pred;
  std::optional<JudgeVerdict> verdict;
};

struct RewardGroupInput {
  std::string record_id;
  std::string gt;
  std::vector<RewardSampleInput> samples;
};

/// JSONL of {record_id, gt, samples: [{pred, verdict?}]}. A malformed fixture
/// verdict fails naming the group and sample.
inline std::vector<RewardGroupInput> load_reward_groups(const fs::path& path) {
  std::vector<RewardGroupInput> out;
  std::ifstream in(path);
  if (!in) fail(Errc::ConfigError, "cannot open reward samples " + path.string());
  for (std::string line; std::getline(in, line);) {
    if (trim_ascii(line).empty()) continue;
    auto j = nlohmann::ordered_json::parse(line, nullptr, false);
    if (j.is_discarded()) fail(Errc::ConfigError, "reward sample line is not JSON");
    RewardGroupInput g{j.at("record_id").get<std::string>(), j.at("gt").get<std::string>(), {}};
    for (std::size_t k = 0; k < j.at("samples").size(); ++k) {
      const auto& s = j["samples"][k];
      RewardSampleInput si{s.at("pred").get<std::string>(), std::nullopt};
      if (s.contains("verdict")) {
        try {
          si.verdict = verdict_from_json(s["verdict"]);
        } catch (const Error& e) {
          fail(e.code(), "group " + g.record_id + " sample " + std::to_string(k) + ": " + e.detail(), k);
        }
      }
      g.samples.push_back(std::move(si));
    }
    if (g.samples.size() < 2) fail(Errc::GroupTooSmall, "group " + g.record_id + " has " + std::to_string(g.samples.size()) + " samples");
    out.push_back(std::move(g));
  }
  return out;
}

inline LengthPenaltyConfig penalty_config(const json& rc) {
  LengthPenaltyConfig c{rc.value("r_low", 0.75), rc.value("r_up", 1.25), rc.value("m", 1.0), rc.value("beta", 1.0)};
  c.validate();
  return c;
}

inline CommandResult cmd_reward(const fs::path& samples_path, const RunContext& ctx) {
  const auto t0 = std::chrono::steady_clock::now();
  CommandResult res{new_report("reward", ctx), {}};
  res.report.effective_config["reward"]["samples"] = fs::absolute(samples_path).string();
  const auto groups = load_reward_groups(samples_path);
  const auto& rc = ctx.config["reward"];
  const LengthPenaltyConfig pc = penalty_config(rc);
  const AdvantageConfig ac{rc.value("epsilon", 1e-8)};
  const bool needs_judge = std::any_of(groups.begin(), groups.end(), [](const auto& g) {
    return std::any_of(g.samples.begin(), g.samples.end(), [](const auto& s) { return !s.verdict; });
  });
  ProviderSet p;
  if (needs_judge) {
    p = providers_for(ctx);
    if (!p.judge) fail(Errc::ConfigError, "samples without fixture verdicts need a judge provider");
  }

  std::vector<std::vector<SampleReward>> scored(groups.size());
  parallel_for(groups.size(), ctx.jobs, [&](std::size_t gi) {
    const auto& g = groups[gi];
    const auto l_gt = static_cast<std::int64_t>(token_count(clean_prediction(g.gt)));
    auto& out = scored[gi];
    out.resize(g.samples.size());
    for (std::size_t k = 0; k < g.samples.size(); ++k) {
      const std::string pred = clean_prediction(g.samples[k].pred);
      out[k].penalty = length_penalty(static_cast<std::int64_t>(token_count(pred)), l_gt, pc);
      std::optional<JudgeVerdict> v = g.samples[k].verdict;
      if (!v) {
        try {
          v = p.judge->judge_transition(pred, g.gt);
        } catch (const Error& e) {
          if (e.code() != Errc::InvalidVerdict) throw;
        }
      }
      if (v) {
        out[k].judge = judge_score(*v);
        out[k].reward = composite_reward(*out[k].judge, out[k].penalty, pc);
      }
    }
    std::vector<double> present;
    for (const auto& s : out) {
      if (s.reward) present.push_back(*s.reward);
    }
    if (present.size() >= 2) {
      const auto adv = group_advantages(present, ac);
      std::size_t j = 0;
      for (auto& s : out) {
        if (s.reward) s.advantage = adv[j++];
      }
    }
  });

  JsonlWriter samples(ctx.out_dir / "reward_samples.jsonl");
  JsonlWriter summaries(ctx.out_dir / "reward_groups.jsonl");
  double reward_sum = 0.0, judge_sum = 0.0;
  std::size_t n = 0, missing = 0;
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    double g_sum = 0.0;
    std::size_t g_n = 0;
    for (std::size_t k = 0; k < scored[gi].size(); ++k) {
      const auto& s = scored[gi][k];
      auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
      samples.write(json{{"record_id", groups[gi].record_id}, {"sample_index", k},   {"judge_score", opt(s.judge)},
                         {"penalty", s.penalty},               {"reward", opt(s.reward)}, {"advantage", opt(s.advantage)}});
      if (s.reward) {
        reward_sum += *s.reward;
        judge_sum += *s.judge;
        g_sum += *s.reward;
        ++g_n;
        ++n;
      } else {
        ++missing;
      }
    }
    summaries.write(json{{"record_id", groups[gi].record_id},
                         {"k", scored[gi].size()},
                         {"scored", g_n},
                         {"mean_reward", g_n ? json(g_sum / static_cast<double>(g_n)) : json(nullptr)}});
  }
  if (missing) res.report.tally("InvalidVerdict", missing);
  res.report.artifacts = {samples.path().string(), summaries.path().string()};
  if (n == 0) fail(Errc::EmptyDataset, "no sample could be scored");
  res.report.aggregates = {{"mean_reward", reward_sum / static_cast<double>(n)},
                           {"mean_judge", judge_sum / static_cast<double>(n)},
                           {"groups", groups.size()},
                           {"scored", n},
                           {"missing", missing}};
  Table t{{"Groups", "Samples", "Missing", "Mean Judge", "Mean Reward"}, {}, ""};
  t.rows.push_back({std::to_string(groups.size()), std::to_string(n + missing), std::to_string(missing),
                    format_number(judge_sum / static_cast<double>(n)), format_number(reward_sum / static_cast<double>(n))});
  res.summary = t.render();
  finish(res, ctx, "reward", t0, needs_judge ? &p : nullptr);
  return res;
}

// ---------------------------------------------------------------------------

inline CommandResult cmd_eval(const std::string& suite, const RunContext& ctx) {
  if (suite == "judge") return eval_judge(ctx);
  if (suite == "acs") return eval_acs(ctx);
  if (suite == "visual") return eval_visual(ctx);
  if (suite == "trs") return eval_trs(ctx);
  if (suite == "search") return eval_search(ctx);
  fail(Errc::ConfigError, "unknown eval suite '" + suite + "'");
}

struct ReplayResult {
  CommandResult rerun;
  bool identical = false;
  json recorded;
};

/// Re-runs the command of a saved report from its effective config with the
/// recorded transcript substituted for every provider, then compares the
/// aggregates exactly.
inline ReplayResult cmd_replay(const fs::path& report_path, const Overrides& o) {
  const RunReport saved = RunReport::from_json(load_json_file(report_path));
  json cfg = saved.effective_config;
  std::optional<fs::path> transcript = o.replay;
  if (!transcript && cfg.contains("record") && cfg["record"].is_string()) transcript = cfg["record"].get<std::string>();
  if (!transcript) fail(Errc::ConfigError, "the report names no recorded transcript; pass --replay");
  cfg["record"] = nullptr;
  cfg["replay"] = fs::absolute(*transcript).string();
  cfg["output_dir"] = fs::absolute(o.out_dir.value_or(fs::path(cfg["output_dir"].get<std::string>()) / "replay")).string();
  if (o.jobs) cfg["jobs"] = *o.jobs;
  const RunContext ctx = make_context(Overrides{}, cfg);

  ReplayResult r;
  r.recorded = saved.aggregates;
  if (saved.command.rfind("eval ", 0) == 0) {
    r.rerun = cmd_eval(saved.command.substr(5), ctx);
  } else if (saved.command == "reward") {
    r.rerun = cmd_reward(cfg["reward"]["samples"].get<std::string>(), ctx);
  } else {
    fail(Errc::ConfigError, "command '" + saved.command + "' cannot be replayed");
  }
  r.identical = r.rerun.report.aggregates == saved.aggregates;
  return r;
}

}  // namespace wmbench::cli
