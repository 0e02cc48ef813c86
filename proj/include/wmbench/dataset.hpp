#pragma once

// Transition-record ingestion: JSONL manifest in, filtered (s_t, a_t, s_t+1)
// records and split bookkeeping out.

#include <array>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "wmbench/a11y.hpp"
#include "wmbench/action.hpp"
#include "wmbench/error.hpp"
#include "wmbench/image.hpp"
#include "wmbench/parallel.hpp"

namespace wmbench {

enum class App { Word, Excel, PowerPoint };
enum class Split { Train, Validation, Test };

inline constexpr std::array<App, 3> kApps{App::Word, App::Excel, App::PowerPoint};
inline constexpr std::array<Split, 3> kSplits{Split::Train, Split::Validation, Split::Test};

inline std::string_view to_string(App a) {
  switch (a) {
    case App::Word: return "Word";
    case App::Excel: return "Excel";
    case App::PowerPoint: return "PowerPoint";
  }
  return "Word";
}

inline std::string_view to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Validation: return "validation";
    case Split::Test: return "test";
  }
  return "train";
}

inline std::optional<App> parse_app(std::string_view s) {
  for (App a : kApps) {
    if (to_string(a) == s) return a;
  }
  return std::nullopt;
}

inline std::optional<Split> parse_split(std::string_view s) {
  for (Split sp : kSplits) {
    if (to_string(sp) == s) return sp;
  }
  return std::nullopt;
}

inline std::string app_display_name(App a) { return "Microsoft " + std::string(to_string(a)); }

struct TransitionRecord {
  std::string record_id;
  App app = App::Word;
  std::string instruction;
  ImageRef screenshot_before;
  ImageRef screenshot_after;
  ActionCall action;
  std::string gt_transition_text;
  std::vector<A11yElement> a11y;
  Split split = Split::Train;
  /// Pre-rendered screenshot with numeric markers over a11y elements.
  std::optional<ImageRef> annotated;
};

/// Counts per (split, app) and record ids per split, both in manifest order.
struct SplitManifest {
  std::array<std::array<std::size_t, 3>, 3> counts{};
  std::array<std::vector<std::string>, 3> ids;

  std::size_t count(Split s, App a) const { return counts[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)]; }
  std::size_t total(Split s) const { return ids[static_cast<std::size_t>(s)].size(); }
  std::size_t total(App a) const {
    std::size_t n = 0;
    for (Split s : kSplits) n += count(s, a);
    return n;
  }

  friend bool operator==(const SplitManifest&, const SplitManifest&) = default;
};

namespace reject_reason {
inline constexpr std::string_view kUnchangedFrame = "unchanged_frame";
inline constexpr std::string_view kInvalidAction = "invalid_action";
inline constexpr std::string_view kMissingImage = "missing_image";
inline constexpr std::string_view kCorrupt = "corrupt";
inline constexpr std::string_view kNoGtText = "no_gt_text";
inline constexpr std::string_view kExcluded = "excluded";
}  // namespace reject_reason

struct Rejection {
  std::string record_id;
  std::string reason;
  std::string detail;
  friend bool operator==(const Rejection&, const Rejection&) = default;
};

struct IngestOptions {
  Resolution target{};
  int jobs = 1;
  /// Raise MissingImage / CorruptImage instead of rejecting the record.
  bool strict_images = false;
};

struct IngestResult {
  SplitManifest manifest;
  std::vector<TransitionRecord> records;
  std::vector<Rejection> rejections;
  std::size_t lines_read = 0;
};

namespace detail {

struct PendingRecord {
  TransitionRecord record;
  std::size_t line = 0;
  std::optional<std::string> action_error;
};

inline std::string required_string(const nlohmann::ordered_json& j, const char* key, std::size_t line) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) {
    fail(Errc::ManifestParseError, "line " + std::to_string(line) + ": field '" + key + "' must be a string");
  }
  return it->get<std::string>();
}

inline std::string resolve_path(const std::filesystem::path& root, const std::string& p) {
  std::filesystem::path path(p);
  return (path.is_absolute() ? path : root / path).lexically_normal().string();
}

}  // namespace detail

inline nlohmann::ordered_json record_to_json(const TransitionRecord& r) {
  nlohmann::ordered_json a11y = nlohmann::ordered_json::array();
  for (const auto& e : r.a11y) a11y.push_back(nlohmann::ordered_json::parse(a11y_to_json(e).dump()));
  nlohmann::ordered_json j{{"record_id", r.record_id},
                           {"app", std::string(to_string(r.app))},
                           {"instruction", r.instruction},
                           {"before", r.screenshot_before.path},
                           {"after", r.screenshot_after.path},
                           {"action", action_to_json(r.action)},
                           {"gt_transition_text", r.gt_transition_text},
                           {"a11y", a11y},
                           {"split", std::string(to_string(r.split))}};
  if (r.annotated) j["annotated"] = r.annotated->path;
  return j;
}

/// Reads the manifest and applies the admission filters. Each rejected
/// record gets exactly one reason, checked in the order: explicit exclusion,
/// missing image, corrupt image, invalid action, empty transition text,
/// unchanged frame.
inline IngestResult ingest(const std::filesystem::path& manifest_path, const std::filesystem::path& image_root,
                           const IngestOptions& opts = {}) {
  std::ifstream in(manifest_path);
  if (!in) fail(Errc::ManifestParseError, "cannot open manifest " + manifest_path.string());

  IngestResult result;
  std::vector<detail::PendingRecord> pending;
  std::unordered_set<std::string> excluded;
  std::unordered_set<std::string> seen_ids;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim_ascii(line).empty()) continue;
    ++result.lines_read;
    auto j = nlohmann::ordered_json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded() || !j.is_object()) {
      fail(Errc::ManifestParseError, "line " + std::to_string(line_no) + ": not a JSON object");
    }
    if (j.size() == 1 && j.contains("exclude")) {
      if (!j["exclude"].is_array()) fail(Errc::ManifestParseError, "line " + std::to_string(line_no) + ": exclude must be a list");
      for (const auto& id : j["exclude"]) {
        if (!id.is_string()) fail(Errc::ManifestParseError, "line " + std::to_string(line_no) + ": exclude ids must be strings");
        excluded.insert(id.get<std::string>());
      }
      continue;
    }

    detail::PendingRecord p;
    p.line = line_no;
    auto& r = p.record;
    r.record_id = detail::required_string(j, "record_id", line_no);
    if (r.record_id.empty()) fail(Errc::ManifestParseError, "line " + std::to_string(line_no) + ": empty record_id");
    if (!seen_ids.insert(r.record_id).second) {
      fail(Errc::ManifestParseError, "line " + std::to_string(line_no) + ": duplicate record_id '" + r.record_id + "'");
    }
    auto app = parse_app(detail::required_string(j, "app", line_no));
    if (!app) fail(Errc::ManifestParseError, "line " + std::to_string(line_no) + ": app must be Word, Excel or PowerPoint");
    r.app = *app;
    auto split = parse_split(detail::required_string(j, "split", line_no));
    if (!split) fail(Errc::ManifestParseError, "line " + std::to_string(line_no) + ": split must be train, validation or test");
    r.split = *split;
    r.instruction = j.contains("instruction") && j["instruction"].is_string() ? j["instruction"].get<std::string>() : "";
    r.screenshot_before.path = detail::resolve_path(image_root, detail::required_string(j, "before", line_no));
    r.screenshot_after.path = detail::resolve_path(image_root, detail::required_string(j, "after", line_no));
    if (auto ann = j.find("annotated"); ann != j.end() && ann->is_string()) {
      r.annotated = ImageRef{detail::resolve_path(image_root, ann->get<std::string>()), 0, 0};
    }
    if (auto gt = j.find("gt_transition_text"); gt != j.end() && gt->is_string()) {
      r.gt_transition_text = gt->get<std::string>();
    }
    try {
      if (auto a11y = j.find("a11y"); a11y != j.end() && !a11y->is_null()) {
        if (!a11y->is_array()) fail(Errc::SchemaViolation, "a11y must be a list");
        for (const auto& e : *a11y) r.a11y.push_back(a11y_from_json(e));
      }
    } catch (const Error& e) {
      fail(Errc::ManifestParseError, "line " + std::to_string(line_no) + ": " + e.detail());
    }
    try {
      auto act = j.find("action");
      if (act == j.end() || act->is_null()) fail(Errc::SchemaViolation, "missing action");
      r.action = act->is_string() ? parse_action(act->get<std::string>()) : action_from_json(*act);
    } catch (const Error& e) {
      p.action_error = e.what();
    }
    pending.push_back(std::move(p));
  }

  // Per-record decisions; images are decoded per record so memory stays
  // bounded by the worker count.
  std::vector<std::optional<Rejection>> verdicts(pending.size());
  parallel_for(pending.size(), opts.jobs, [&](std::size_t i) {
    auto& p = pending[i];
    auto& r = p.record;
    auto reject = [&](std::string_view reason, std::string detail) {
      verdicts[i] = Rejection{r.record_id, std::string(reason), std::move(detail)};
    };
    if (excluded.count(r.record_id)) return reject(reject_reason::kExcluded, "listed in manifest exclude set");

    std::optional<Image> before, after;
    for (auto* ref : {&r.screenshot_before, &r.screenshot_after}) {
      std::error_code ec;
      if (!std::filesystem::is_regular_file(ref->path, ec)) {
        if (opts.strict_images) fail(Errc::MissingImage, "record " + r.record_id + ": no such image " + ref->path);
        return reject(reject_reason::kMissingImage, ref->path);
      }
    }
    try {
      before = load_image(r.screenshot_before.path);
      after = load_image(r.screenshot_after.path);
    } catch (const Error& e) {
      if (opts.strict_images) throw;
      return reject(reject_reason::kCorrupt, e.detail());
    }
    r.screenshot_before.width = before->width;
    r.screenshot_before.height = before->height;
    r.screenshot_after.width = after->width;
    r.screenshot_after.height = after->height;

    if (p.action_error) return reject(reject_reason::kInvalidAction, *p.action_error);
    if (trim_ascii(r.gt_transition_text).empty()) return reject(reject_reason::kNoGtText, "empty gt_transition_text");
    if (filter_unchanged(normalize_resolution(*before, opts.target), normalize_resolution(*after, opts.target))) {
      return reject(reject_reason::kUnchangedFrame, "frames identical after normalisation");
    }
  });

  for (std::size_t i = 0; i < pending.size(); ++i) {
    if (verdicts[i]) {
      result.rejections.push_back(std::move(*verdicts[i]));
      continue;
    }
    auto& r = pending[i].record;
    const auto s = static_cast<std::size_t>(r.split);
    result.manifest.counts[s][static_cast<std::size_t>(r.app)] += 1;
    result.manifest.ids[s].push_back(r.record_id);
    result.records.push_back(std::move(r));
  }
  return result;
}

inline std::vector<TransitionRecord> records_in_split(const IngestResult& r, Split split) {
  std::vector<TransitionRecord> out;
  for (const auto& rec : r.records) {
    if (rec.split == split) out.push_back(rec);
  }
  return out;
}

}  // namespace wmbench
