#pragma once

// Human-readable tables and the machine-readable run report. Table layouts
// are a rendering concern only; every number comes from a per-sample file.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "wmbench/digest.hpp"
#include "wmbench/error.hpp"

namespace wmbench {

/// Fixed-precision decimal; infinities render as "inf" / "-inf".
inline std::string format_number(double v, int precision = 4) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

/// JSON cannot hold infinities; they are written as the strings "inf"/"-inf".
inline nlohmann::json number_json(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return nullptr;
  return v;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::string title;

  /// Columns joined by " | ", padded to the widest cell, with a dashed rule
  /// under the header.
  std::string render() const {
    std::vector<std::size_t> width(header.size(), 0);
    auto measure = [&](const std::vector<std::string>& r) {
      for (std::size_t i = 0; i < r.size() && i < width.size(); ++i) width[i] = std::max(width[i], r[i].size());
    };
    measure(header);
    for (const auto& r : rows) measure(r);
    auto line = [&](const std::vector<std::string>& r) {
      std::string out;
      for (std::size_t i = 0; i < width.size(); ++i) {
        const std::string cell = i < r.size() ? r[i] : "";
        if (i) out += " | ";
        out += cell;
        if (i + 1 < width.size()) out += std::string(width[i] - cell.size(), ' ');
      }
      return out + "\n";
    };
    std::string out = title.empty() ? "" : title + "\n";
    out += line(header);
    std::size_t total = 0;
    for (std::size_t w : width) total += w;
    out += std::string(total + (width.empty() ? 0 : 3 * (width.size() - 1)), '-') + "\n";
    for (const auto& r : rows) out += line(r);
    return out;
  }
};

/// Column schemas of the published tables.
namespace table_schema {
inline const std::vector<std::string> kJudge{"Model"};  // followed by one column per model variant
inline const std::string kJudgeRow = "Judge Score";
inline const std::vector<std::string> kAcs{"Model", "Agent", "Score"};
inline const std::vector<std::string> kVisual{"Method", "PSNR", "SSIM", "LPIPS", "FID"};
inline const std::vector<std::string> kTrs{"Method", "Word", "Excel", "PPT", "Overall"};
inline const std::vector<std::string> kSearch{"Agent", "None", "Text", "Image", "Image+Text"};
inline const std::vector<std::string> kSearchNoGt{"Agent", "No GT", "None", "Text", "Image", "Image+Text"};
inline const std::vector<std::string> kSplits{"Data Split", "Word", "Excel", "PowerPoint"};
}  // namespace table_schema

struct RunReport {
  std::string run_id;
  std::string command;
  std::string config_hash;
  std::map<std::string, std::string> template_hashes;
  nlohmann::json aggregates = nlohmann::json::object();
  std::map<std::string, std::size_t> error_tallies;
  nlohmann::json timing = nlohmann::json::object();
  std::vector<std::string> artifacts;
  nlohmann::json providers = nlohmann::json::object();
  nlohmann::json effective_config = nlohmann::json::object();
  std::vector<std::string> warnings;

  void tally(const std::string& kind, std::size_t n = 1) { error_tallies[kind] += n; }

  nlohmann::json to_json() const {
    return {{"run_id", run_id},
            {"command", command},
            {"config_hash", config_hash},
            {"template_hashes", template_hashes},
            {"aggregates", aggregates},
            {"error_tallies", error_tallies},
            {"timing", timing},
            {"artifacts", artifacts},
            {"providers", providers},
            {"effective_config", effective_config},
            {"warnings", warnings}};
  }

  static RunReport from_json(const nlohmann::json& j) {
    RunReport r;
    r.run_id = j.value("run_id", "");
    r.command = j.value("command", "");
    r.config_hash = j.value("config_hash", "");
    r.template_hashes = j.value("template_hashes", std::map<std::string, std::string>{});
    r.aggregates = j.value("aggregates", nlohmann::json::object());
    r.error_tallies = j.value("error_tallies", std::map<std::string, std::size_t>{});
    r.timing = j.value("timing", nlohmann::json::object());
    r.artifacts = j.value("artifacts", std::vector<std::string>{});
    r.providers = j.value("providers", nlohmann::json::object());
    r.effective_config = j.value("effective_config", nlohmann::json::object());
    r.warnings = j.value("warnings", std::vector<std::string>{});
    return r;
  }
};

/// Line-buffered JSONL writer for per-sample artifacts.
class JsonlWriter {
 public:
  explicit JsonlWriter(const std::filesystem::path& path) : path_(path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    out_.open(path, std::ios::trunc);
    if (!out_) fail(Errc::ConfigError, "cannot write " + path.string());
  }
  template <typename Json>
  void write(const Json& j) {
    out_ << j.dump() << '\n';
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

inline void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(Errc::ConfigError, "cannot write " + path.string());
  out << text;
}

}  // namespace wmbench
