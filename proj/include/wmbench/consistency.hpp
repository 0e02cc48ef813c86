#pragma once

// Action-level matching (function / status / args / overall) and the
// Action Consistency Score.

#include <cstdint>
#include <cstdlib>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "wmbench/action.hpp"
#include "wmbench/error.hpp"

namespace wmbench {

inline constexpr std::int64_t kCoordinateTolerancePx = 25;

struct BoundingBox {
  std::int64_t x_min = 0;
  std::int64_t y_min = 0;
  std::int64_t x_max = 0;
  std::int64_t y_max = 0;

  bool contains(Point p) const { return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max; }
  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

/// Where the ground-truth target sits on screen. The box belongs to the
/// ground truth; predictions are tested for containment in it.
struct TargetGeometry {
  std::optional<Point> gt_coordinate;
  std::optional<BoundingBox> gt_bbox;

  void validate() const {
    if (gt_bbox && (gt_bbox->x_min > gt_bbox->x_max || gt_bbox->y_min > gt_bbox->y_max)) {
      fail(Errc::SchemaViolation, "bounding box corners are inverted");
    }
  }
};

struct MatchBreakdown {
  bool func_match = false;
  bool status_match = false;
  bool args_match = false;
  bool overall_match = false;
  double instance_score = 0.0;

  friend bool operator==(const MatchBreakdown&, const MatchBreakdown&) = default;
};

inline double weighted_instance_score(bool func, bool status, bool args) {
  return 0.25 * (func ? 1.0 : 0.0) + 0.25 * (status ? 1.0 : 0.0) + 0.50 * (args ? 1.0 : 0.0);
}

inline bool within_tolerance(Point a, Point b, std::int64_t tol = kCoordinateTolerancePx) {
  return std::llabs(a.x - b.x) <= tol && std::llabs(a.y - b.y) <= tol;
}

namespace detail {

inline bool json_equal_null_absent(const ordered_json* a, const ordered_json* b) {
  if (!a || !b) return !a && !b;
  return *a == *b;
}

inline bool is_target_key(std::string_view key) {
  return key == arg_keys::kCoordinate || key == arg_keys::kStartCoordinate || key == arg_keys::kEndCoordinate ||
         key == arg_keys::kControlLabel || key == arg_keys::kControlInfo;
}

inline const ordered_json* control_field(const ActionArgs& args, const char* field) {
  const auto* info = args.get(arg_keys::kControlInfo);
  if (!info) return nullptr;
  auto it = info->find(field);
  if (it == info->end() || it->is_null()) return nullptr;
  return &*it;
}

}  // namespace detail

/// Argument agreement:
///  - label fields (control_label, control_info.control_text/control_type)
///    present on both sides must be equal; a label present on one side only
///    is forgiven when another label matched or the predicted point falls in
///    the ground-truth box;
///  - the click/type coordinate passes within +/-25 px on both axes or by box
///    containment; a coordinate present on one side only needs a matched
///    label (or, for a predicted point, box containment);
///  - drag endpoints both need the +/-25 px rule;
///  - all remaining keys match exactly, null and absent being the same.
inline bool match_args(const ActionArgs& pred, const ActionArgs& gt, const TargetGeometry& geometry = {}) {
  const std::optional<Point> pred_pt = pred.coordinate();
  const bool bbox_hit = geometry.gt_bbox && pred_pt && geometry.gt_bbox->contains(*pred_pt);

  // Labels.
  struct LabelField {
    const ordered_json* p;
    const ordered_json* g;
  };
  const LabelField labels[] = {
      {pred.get(arg_keys::kControlLabel), gt.get(arg_keys::kControlLabel)},
      {detail::control_field(pred, "control_text"), detail::control_field(gt, "control_text")},
  };
  bool matched_label = false;
  for (const auto& f : labels) {
    if (f.p && f.g) {
      if (*f.p != *f.g) return false;
      matched_label = true;
    }
  }
  const LabelField control_type{detail::control_field(pred, "control_type"), detail::control_field(gt, "control_type")};
  if (control_type.p && control_type.g && *control_type.p != *control_type.g) return false;
  for (const auto& f : {labels[0], labels[1], control_type}) {
    const bool one_sided = (f.p == nullptr) != (f.g == nullptr);
    if (one_sided && !matched_label && !bbox_hit) return false;
  }

  // Primary coordinate.
  std::optional<Point> gt_pt = gt.coordinate();
  if (!gt_pt) gt_pt = geometry.gt_coordinate;
  if (pred_pt && gt_pt) {
    if (!within_tolerance(*pred_pt, *gt_pt) && !bbox_hit) return false;
  } else if (pred_pt) {
    if (!bbox_hit && !matched_label) return false;
  } else if (gt_pt) {
    if (!matched_label) return false;
  }

  // Drag endpoints.
  for (auto key : {arg_keys::kStartCoordinate, arg_keys::kEndCoordinate}) {
    const auto p = key == arg_keys::kStartCoordinate ? pred.start_coordinate() : pred.end_coordinate();
    const auto g = key == arg_keys::kStartCoordinate ? gt.start_coordinate() : gt.end_coordinate();
    if (p.has_value() != g.has_value()) return false;
    if (p && !within_tolerance(*p, *g)) return false;
  }

  // Everything else is exact.
  auto check_rest = [](const ActionArgs& a, const ActionArgs& b) {
    for (auto it = a.json().begin(); it != a.json().end(); ++it) {
      if (detail::is_target_key(it.key())) continue;
      if (!detail::json_equal_null_absent(a.get(it.key()), b.get(it.key()))) return false;
    }
    return true;
  };
  return check_rest(pred, gt) && check_rest(gt, pred);
}

inline MatchBreakdown match_actions(const ActionCall& pred, const ActionCall& gt, const TargetGeometry& geometry = {}) {
  MatchBreakdown b;
  b.func_match = pred.function == gt.function;
  b.status_match = pred.status == gt.status;
  b.args_match = match_args(pred.args, gt.args, geometry);
  b.overall_match = b.func_match && b.status_match && b.args_match;
  b.instance_score = weighted_instance_score(b.func_match, b.status_match, b.args_match);
  return b;
}

/// One scored pair; an absent action stands for an invalid agent output.
struct ActionPair {
  std::optional<ActionCall> pred;
  std::optional<ActionCall> gt;
  TargetGeometry geometry;
};

/// Breakdown for a possibly-invalid pair: invalid on either side scores 0.
inline MatchBreakdown score_pair(const ActionPair& pair) {
  if (!pair.pred || !pair.gt) return MatchBreakdown{};
  return match_actions(*pair.pred, *pair.gt, pair.geometry);
}

inline double action_consistency_score(std::span<const ActionPair> pairs) {
  if (pairs.empty()) fail(Errc::EmptyDataset, "action consistency needs at least one pair");
  double sum = 0.0;
  for (const auto& p : pairs) sum += score_pair(p).instance_score;
  return sum / static_cast<double>(pairs.size());
}

inline nlohmann::ordered_json breakdown_to_json(std::string_view record_id, const MatchBreakdown& b) {
  return {{"record_id", record_id}, {"func", b.func_match},          {"status", b.status_match},
          {"args", b.args_match},   {"overall", b.overall_match}, {"instance_score", b.instance_score}};
}

inline constexpr std::string_view kBreakdownCsvHeader = "record_id,func,status,args,overall,instance_score";

inline std::string breakdown_to_csv_row(std::string_view record_id, const MatchBreakdown& b) {
  auto flag = [](bool v) { return v ? "1" : "0"; };
  std::string quoted = "\"";
  for (char c : record_id) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  quoted += '"';
  return quoted + "," + flag(b.func_match) + "," + flag(b.status_match) + "," + flag(b.args_match) + "," +
         flag(b.overall_match) + "," + nlohmann::json(b.instance_score).dump();
}

}  // namespace wmbench
