// wmbench: ingest, eval, reward and replay front end.

#include <iostream>

#include <CLI11.hpp>

#include "wmbench/cli/commands.hpp"

namespace {

using namespace wmbench;
using namespace wmbench::cli;

int run(CLI::App& app, const Overrides& o, const std::string& suite, const std::string& manifest, const std::string& image_root,
        bool strict_images, const std::string& samples, const std::string& report) {
  if (app.got_subcommand("replay")) {
    const ReplayResult r = cmd_replay(report, o);
    std::cout << r.rerun.summary;
    if (!r.identical) {
      std::cout << "replay: aggregates differ\n  recorded: " << r.recorded.dump() << "\n  replayed: " << r.rerun.report.aggregates.dump()
                << "\n";
      return kExitFailure;
    }
    std::cout << "replay: aggregates identical\n";
    return kExitOk;
  }

  const RunContext ctx = make_context(o);
  CommandResult res;
  if (app.got_subcommand("ingest")) {
    const auto& d = ctx.config["dataset"];
    const fs::path m = !manifest.empty() ? fs::path(manifest)
                       : d["manifest"].is_string() ? ctx.resolve(d["manifest"])
                                                   : fs::path();
    if (m.empty()) fail(Errc::ConfigError, "ingest needs a manifest path");
    const fs::path root = !image_root.empty() ? fs::path(image_root) : ctx.resolve(d["image_root"]);
    res = cmd_ingest(m, root, ctx, strict_images);
  } else if (app.got_subcommand("eval")) {
    res = cmd_eval(suite, ctx);
  } else {
    fs::path s = samples;
    if (s.empty()) {
      auto configured = ctx.optional_path("/reward/samples"_json_pointer);
      if (!configured) fail(Errc::ConfigError, "reward needs a samples file");
      s = *configured;
    }
    res = cmd_reward(s, ctx);
  }
  std::cout << res.summary;
  for (const auto& [kind, n] : res.report.error_tallies) std::cerr << "tally " << kind << ": " << n << "\n";
  for (const auto& w : res.report.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << "report: " << res.report.artifacts.back() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"World-model agent evaluation harness"};
  app.require_subcommand(1);

  Overrides o;
  std::string config, record, replay, out, mode;
  int jobs = 0, num_options = 0;
  bool exclude_no_gt = false;
  app.add_option("--config", config, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--record", record, "Write a provider transcript to this JSONL file");
  app.add_option("--replay", replay, "Answer every provider call from this transcript")->check(CLI::ExistingFile);
  app.add_option("--out", out, "Output directory");
  app.add_flag("--exclude-no-gt", exclude_no_gt, "Drop samples whose ground-truth action was never proposed");
  app.add_option("--mode", mode, "Search modes: none,text,image,image_text or all");
  app.add_option("--num-options", num_options, "Candidates proposed per record")->check(CLI::PositiveNumber);

  std::string manifest, image_root, suite, samples, report;
  bool strict_images = false;
  auto* ingest = app.add_subcommand("ingest", "Validate a manifest and report split counts");
  ingest->add_option("manifest", manifest, "Manifest JSONL");
  ingest->add_option("image_root", image_root, "Directory screenshots resolve against");
  ingest->add_flag("--strict-images", strict_images, "Fail on the first unreadable image");
  auto* eval = app.add_subcommand("eval", "Run a metric suite");
  eval->add_option("suite", suite, "acs, judge, visual, trs or search")
      ->required()
      ->check(CLI::IsMember({"acs", "judge", "visual", "trs", "search"}));
  auto* reward = app.add_subcommand("reward", "Score K-sample groups and compute advantages");
  reward->add_option("samples", samples, "Group fixture JSONL");
  auto* rep = app.add_subcommand("replay", "Re-run a saved report from its transcript and compare");
  rep->add_option("report", report, "Saved report JSON")->required()->check(CLI::ExistingFile);
  app.fallthrough();

  CLI11_PARSE(app, argc, argv);
  try {
    if (!config.empty()) o.config = config;
    if (jobs > 0) o.jobs = jobs;
    if (!record.empty()) o.record = record;
    if (!replay.empty()) o.replay = replay;
    if (!out.empty()) o.out_dir = out;
    if (exclude_no_gt) o.exclude_no_gt = true;
    if (!mode.empty()) o.mode = mode;
    if (num_options > 0) o.num_options = num_options;
    return run(app, o, suite, manifest, image_root, strict_images, samples, report);
  } catch (const wmbench::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return wmbench::cli::exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return wmbench::cli::kExitFailure;
  }
}
