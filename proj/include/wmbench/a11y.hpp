#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wmbench/consistency.hpp"
#include "wmbench/error.hpp"

namespace wmbench {

/// One labelled control from an accessibility snapshot.
struct A11yElement {
  std::int64_t control_label = 0;
  std::string control_type;
  std::string control_text;
  std::optional<BoundingBox> bbox;

  friend bool operator==(const A11yElement&, const A11yElement&) = default;
};

inline nlohmann::json a11y_to_json(const A11yElement& e) {
  nlohmann::json j{{"control_label", e.control_label}, {"control_type", e.control_type}, {"control_text", e.control_text}};
  if (e.bbox) j["bbox"] = {e.bbox->x_min, e.bbox->y_min, e.bbox->x_max, e.bbox->y_max};
  return j;
}

template <typename Json>
A11yElement a11y_from_json(const Json& j) {
  if (!j.is_object()) fail(Errc::SchemaViolation, "a11y element must be an object");
  A11yElement e;
  auto label = j.find("control_label");
  if (label == j.end() || !label->is_number_integer()) fail(Errc::SchemaViolation, "a11y element needs integer control_label");
  e.control_label = label->template get<std::int64_t>();
  if (auto t = j.find("control_type"); t != j.end() && t->is_string()) e.control_type = t->template get<std::string>();
  if (auto t = j.find("control_text"); t != j.end() && t->is_string()) e.control_text = t->template get<std::string>();
  if (auto b = j.find("bbox"); b != j.end() && !b->is_null()) {
    if (!b->is_array() || b->size() != 4) fail(Errc::SchemaViolation, "bbox must hold 4 integers");
    for (const auto& v : *b) {
      if (!v.is_number_integer()) fail(Errc::SchemaViolation, "bbox must hold 4 integers");
    }
    e.bbox = BoundingBox{(*b)[0].template get<std::int64_t>(), (*b)[1].template get<std::int64_t>(),
                         (*b)[2].template get<std::int64_t>(), (*b)[3].template get<std::int64_t>()};
    if (e.bbox->x_min > e.bbox->x_max || e.bbox->y_min > e.bbox->y_max) {
      fail(Errc::SchemaViolation, "bbox corners are inverted");
    }
  }
  return e;
}

/// "label: [type] text" per line, the listing shown to agents.
inline std::string a11y_listing(std::span<const A11yElement> elements) {
  std::string out;
  for (const auto& e : elements) {
    out += std::to_string(e.control_label) + ": [" + e.control_type + "] " + e.control_text + "\n";
  }
  return out;
}

inline const A11yElement* find_control(std::span<const A11yElement> elements, std::int64_t label) {
  for (const auto& e : elements) {
    if (e.control_label == label) return &e;
  }
  return nullptr;
}

/// Ground-truth geometry for an action: its own coordinate, and the box of
/// the control it names, looked up by label or by control text.
inline TargetGeometry geometry_for(const ActionCall& gt, std::span<const A11yElement> elements) {
  TargetGeometry g;
  g.gt_coordinate = gt.args.coordinate();
  if (auto label = gt.args.control_label()) {
    if (const auto* e = find_control(elements, *label); e && e->bbox) g.gt_bbox = e->bbox;
  }
  if (!g.gt_bbox) {
    if (auto info = gt.args.control_info(); info && info->control_text) {
      for (const auto& e : elements) {
        if (e.control_text == *info->control_text && e.bbox) {
          g.gt_bbox = e.bbox;
          break;
        }
      }
    }
  }
  return g;
}

}  // namespace wmbench
