#pragma once

// Shared test scaffolding: scratch directories and hand-rolled generators.

#include <atomic>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "wmbench/action.hpp"
#include "wmbench/reward.hpp"

namespace wmbench::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> serial{0};
    path_ = std::filesystem::temp_directory_path() /
            ("wmbench_" + std::to_string(::getpid()) + "_" + std::to_string(serial++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& leaf) const { return path_ / leaf; }

 private:
  std::filesystem::path path_;
};

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  double real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  bool coin() { return uniform(0, 1) == 1; }
  template <typename T>
  const T& pick(const std::vector<T>& v) {
    return v[static_cast<std::size_t>(uniform(0, static_cast<int>(v.size()) - 1))];
  }
  std::mt19937_64& engine() { return rng_; }

  std::string word(int min_len = 1, int max_len = 8) {
    static const std::string alphabet = "abcdefghijklmnopqrstuvwxyz0123456789 _-";
    std::string s;
    const int n = uniform(min_len, max_len);
    for (int i = 0; i < n; ++i) s.push_back(alphabet[static_cast<std::size_t>(uniform(0, static_cast<int>(alphabet.size()) - 1))]);
    return s;
  }

  /// Any valid action: typed known args, opaque extras, explicit nulls and
  /// the terminal FINISH form.
  ActionCall action() {
    ActionCall a;
    if (uniform(0, 9) == 0) {
      a.status = ActionStatus::Finish;
      return a;
    }
    a.function = pick<std::string>({"click", "type", "select_text", "drag", "wheel_mouse_input", "summary"});
    a.status = coin() ? ActionStatus::Continue : ActionStatus::Finish;
    if (a.function == "drag") {
      a.args.set("start_coordinate", {uniform(0, 1279), uniform(0, 719)});
      a.args.set("end_coordinate", {uniform(0, 1279), uniform(0, 719)});
    }
    if (coin()) a.args.set("coordinate", coin() ? nlohmann::ordered_json{uniform(0, 1279), uniform(0, 719)} : nlohmann::ordered_json());
    if (coin()) a.args.set("text", word());
    if (coin()) a.args.set("button", pick<std::string>({"left", "right"}));
    if (coin()) a.args.set("keys", word(1, 3));
    if (coin()) a.args.set("clear_current_text", coin());
    if (coin()) a.args.set("control_label", uniform(0, 80));
    if (coin()) a.args.set_control_info(pick<std::string>({"Button", "Edit", "TabItem"}), word());
    if (coin()) a.args.set("zoom_level", uniform(1, 5));
    if (coin()) a.args.set("x_" + word(1, 4), word());
    return a;
  }

  JudgeVerdict verdict() {
    static const std::vector<double> scores{0.0, 0.5, 1.0};
    JudgeVerdict v;
    for (auto a : kJudgeAspects) v.scores[std::string(a)] = pick(scores);
    return v;
  }

 private:
  std::mt19937_64 rng_;
};

}  // namespace wmbench::testing
