#pragma once

// Structured agent actions: the {function, args, status} documents that the
// agent emits, the planner passes around and the consistency metrics match.

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "wmbench/error.hpp"
#include "wmbench/json_text.hpp"

namespace wmbench {

using ordered_json = nlohmann::ordered_json;

struct Point {
  std::int64_t x = 0;
  std::int64_t y = 0;
  friend auto operator<=>(const Point&, const Point&) = default;
};

enum class ActionStatus { Continue, Finish };

inline std::string_view to_string(ActionStatus s) { return s == ActionStatus::Continue ? "CONTINUE" : "FINISH"; }

/// Case-sensitive: "continue" is not a status.
inline std::optional<ActionStatus> parse_status(std::string_view s) {
  if (s == "CONTINUE") return ActionStatus::Continue;
  if (s == "FINISH") return ActionStatus::Finish;
  return std::nullopt;
}

struct ControlInfo {
  std::optional<std::string> control_type;
  std::optional<std::string> control_text;
};

namespace arg_keys {
inline constexpr std::string_view kCoordinate = "coordinate";
inline constexpr std::string_view kStartCoordinate = "start_coordinate";
inline constexpr std::string_view kEndCoordinate = "end_coordinate";
inline constexpr std::string_view kButton = "button";
inline constexpr std::string_view kKeys = "keys";
inline constexpr std::string_view kText = "text";
inline constexpr std::string_view kClearCurrentText = "clear_current_text";
inline constexpr std::string_view kControlLabel = "control_label";
inline constexpr std::string_view kControlInfo = "control_info";

inline constexpr std::array<std::string_view, 9> kKnown{
    kCoordinate, kStartCoordinate, kEndCoordinate, kButton,      kKeys,
    kText,       kClearCurrentText, kControlLabel, kControlInfo,
};

inline bool is_known(std::string_view key) {
  for (auto k : kKnown) {
    if (k == key) return true;
  }
  return false;
}
}  // namespace arg_keys

/// Action arguments. The original JSON object is the source of truth, so key
/// order, explicit nulls and keys the harness does not understand all survive
/// a parse/serialize round trip; the typed accessors read through it.
class ActionArgs {
 public:
  ActionArgs() : doc_(ordered_json::object()) {}

  /// Validates the types of every recognised key. Unknown keys are kept as-is.
  static ActionArgs from_json(const ordered_json& doc) {
    if (!doc.is_object()) fail(Errc::SchemaViolation, "args must be an object");
    ActionArgs args;
    args.doc_ = doc;
    args.validate();
    return args;
  }

  const ordered_json& json() const { return doc_; }

  /// Present and not null.
  bool has(std::string_view key) const {
    auto it = doc_.find(std::string(key));
    return it != doc_.end() && !it->is_null();
  }

  const ordered_json* get(std::string_view key) const {
    auto it = doc_.find(std::string(key));
    if (it == doc_.end() || it->is_null()) return nullptr;
    return &*it;
  }

  std::optional<Point> coordinate() const { return point_at(arg_keys::kCoordinate); }
  std::optional<Point> start_coordinate() const { return point_at(arg_keys::kStartCoordinate); }
  std::optional<Point> end_coordinate() const { return point_at(arg_keys::kEndCoordinate); }
  std::optional<std::string> button() const { return string_at(arg_keys::kButton); }
  std::optional<std::string> keys() const { return string_at(arg_keys::kKeys); }
  std::optional<std::string> text() const { return string_at(arg_keys::kText); }

  std::optional<bool> clear_current_text() const {
    if (const auto* v = get(arg_keys::kClearCurrentText)) return v->get<bool>();
    return std::nullopt;
  }

  std::optional<std::int64_t> control_label() const {
    if (const auto* v = get(arg_keys::kControlLabel)) return v->get<std::int64_t>();
    return std::nullopt;
  }

  std::optional<ControlInfo> control_info() const {
    const auto* v = get(arg_keys::kControlInfo);
    if (!v) return std::nullopt;
    ControlInfo info;
    if (auto t = v->find("control_type"); t != v->end() && t->is_string()) info.control_type = t->get<std::string>();
    if (auto t = v->find("control_text"); t != v->end() && t->is_string()) info.control_text = t->get<std::string>();
    return info;
  }

  /// Keys outside the recognised set, in document order.
  std::vector<std::string> opaque_keys() const {
    std::vector<std::string> out;
    for (auto it = doc_.begin(); it != doc_.end(); ++it) {
      if (!arg_keys::is_known(it.key())) out.push_back(it.key());
    }
    return out;
  }

  ActionArgs& set(std::string_view key, ordered_json value) {
    doc_[std::string(key)] = std::move(value);
    validate();
    return *this;
  }
  ActionArgs& set_coordinate(Point p) { return set(arg_keys::kCoordinate, ordered_json::array({p.x, p.y})); }
  ActionArgs& set_start_coordinate(Point p) { return set(arg_keys::kStartCoordinate, ordered_json::array({p.x, p.y})); }
  ActionArgs& set_end_coordinate(Point p) { return set(arg_keys::kEndCoordinate, ordered_json::array({p.x, p.y})); }
  ActionArgs& set_control_label(std::int64_t label) { return set(arg_keys::kControlLabel, label); }
  ActionArgs& set_control_info(std::string type, std::string text) {
    return set(arg_keys::kControlInfo, ordered_json{{"control_type", std::move(type)}, {"control_text", std::move(text)}});
  }

  bool empty() const { return doc_.empty(); }

  friend bool operator==(const ActionArgs& a, const ActionArgs& b) { return a.doc_ == b.doc_; }

 private:
  static bool is_point(const ordered_json& v) {
    return v.is_array() && v.size() == 2 && v[0].is_number_integer() && v[1].is_number_integer();
  }

  std::optional<Point> point_at(std::string_view key) const {
    const auto* v = get(key);
    if (!v) return std::nullopt;
    return Point{(*v)[0].get<std::int64_t>(), (*v)[1].get<std::int64_t>()};
  }

  std::optional<std::string> string_at(std::string_view key) const {
    if (const auto* v = get(key)) return v->get<std::string>();
    return std::nullopt;
  }

  void validate() const {
    for (auto key : {arg_keys::kCoordinate, arg_keys::kStartCoordinate, arg_keys::kEndCoordinate}) {
      if (const auto* v = get(key); v && !is_point(*v)) {
        fail(Errc::SchemaViolation, std::string(key) + " must be a pair of integers, got " + v->dump());
      }
    }
    for (auto key : {arg_keys::kButton, arg_keys::kKeys, arg_keys::kText}) {
      if (const auto* v = get(key); v && !v->is_string()) {
        fail(Errc::SchemaViolation, std::string(key) + " must be a string");
      }
    }
    if (const auto* v = get(arg_keys::kClearCurrentText); v && !v->is_boolean()) {
      fail(Errc::SchemaViolation, "clear_current_text must be a boolean");
    }
    if (const auto* v = get(arg_keys::kControlLabel); v && !v->is_number_integer()) {
      fail(Errc::SchemaViolation, "control_label must be an integer");
    }
    if (const auto* v = get(arg_keys::kControlInfo)) {
      if (!v->is_object()) fail(Errc::SchemaViolation, "control_info must be an object");
      for (const char* field : {"control_type", "control_text"}) {
        auto it = v->find(field);
        if (it != v->end() && !it->is_null() && !it->is_string()) {
          fail(Errc::SchemaViolation, std::string("control_info.") + field + " must be a string");
        }
      }
    }
  }

  ordered_json doc_;
};

struct ActionCall {
  std::string function;
  ActionArgs args;
  ActionStatus status = ActionStatus::Continue;

  friend bool operator==(const ActionCall&, const ActionCall&) = default;
};

/// Checks the cross-field invariants of a typed action.
inline void validate_action(const ActionCall& a) {
  if (a.function.empty() && a.status != ActionStatus::Finish) {
    fail(Errc::SchemaViolation, "empty function is only allowed with status FINISH");
  }
  if (a.function == "drag" && (!a.args.start_coordinate() || !a.args.end_coordinate())) {
    fail(Errc::SchemaViolation, "drag requires start_coordinate and end_coordinate");
  }
}

inline ActionCall action_from_json(const ordered_json& doc) {
  if (!doc.is_object()) fail(Errc::SchemaViolation, "action must be an object");
  ActionCall a;
  auto fn = doc.find("function");
  if (fn == doc.end() || !fn->is_string()) fail(Errc::SchemaViolation, "missing string field 'function'");
  a.function = fn->get<std::string>();
  auto st = doc.find("status");
  if (st == doc.end()) fail(Errc::SchemaViolation, "missing field 'status'");
  if (!st->is_string()) fail(Errc::SchemaViolation, "status must be a string");
  auto status = parse_status(st->get_ref<const std::string&>());
  if (!status) fail(Errc::SchemaViolation, "status '" + st->get<std::string>() + "' is not CONTINUE or FINISH");
  a.status = *status;
  if (auto args = doc.find("args"); args != doc.end() && !args->is_null()) {
    a.args = ActionArgs::from_json(*args);
  }
  validate_action(a);
  return a;
}

inline ordered_json action_to_json(const ActionCall& a) {
  ordered_json doc = ordered_json::object();
  doc["function"] = a.function;
  doc["args"] = a.args.json();
  doc["status"] = std::string(to_string(a.status));
  return doc;
}

inline ActionCall parse_action(std::string_view document) {
  auto doc = ordered_json::parse(document, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) fail(Errc::MalformedDocument, "action document is not valid JSON");
  if (!doc.is_object()) fail(Errc::MalformedDocument, "action document must be a single object");
  return action_from_json(doc);
}

inline std::string serialize_action(const ActionCall& a) { return action_to_json(a).dump(); }

struct CandidateOption {
  std::string thoughts;
  ActionCall tool_call;

  friend bool operator==(const CandidateOption&, const CandidateOption&) = default;
};

inline ordered_json candidate_to_json(const CandidateOption& c) {
  return ordered_json{{"thoughts", c.thoughts}, {"tool_call", action_to_json(c.tool_call)}};
}

inline CandidateOption candidate_from_json(const ordered_json& el, std::size_t index) {
  const std::string where = "element " + std::to_string(index);
  if (!el.is_object()) fail(Errc::SchemaViolation, where + " is not an object", index);
  auto th = el.find("thoughts");
  if (th == el.end() || !th->is_string()) fail(Errc::SchemaViolation, where + " lacks string 'thoughts'", index);
  auto tc = el.find("tool_call");
  if (tc == el.end() || tc->is_null()) fail(Errc::SchemaViolation, where + " lacks 'tool_call'", index);
  try {
    return CandidateOption{th->get<std::string>(), action_from_json(*tc)};
  } catch (const Error& e) {
    fail(Errc::SchemaViolation, where + ": " + e.detail(), index);
  }
}

/// Parses a JSON array of {thoughts, tool_call}. A single ``` fence around
/// the array is tolerated; any other surrounding text is malformed.
inline std::vector<CandidateOption> parse_candidate_array(std::string_view document) {
  const std::string body = strip_code_fence(document);
  auto doc = ordered_json::parse(body, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) fail(Errc::MalformedDocument, "candidate document is not valid JSON");
  if (!doc.is_array()) fail(Errc::MalformedDocument, "candidate document must be a JSON array");
  if (doc.empty()) fail(Errc::EmptyArray, "candidate array is empty");
  std::vector<CandidateOption> out;
  out.reserve(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i) out.push_back(candidate_from_json(doc[i], i));
  return out;
}

/// One-line natural-language gloss of an action, bound into the
/// transition prompt's GUI description slot.
inline std::string describe_action(const ActionCall& a) {
  if (a.function.empty()) return "No operation; the agent declares the task finished.";
  std::string target;
  if (auto info = a.args.control_info(); info && info->control_text) {
    target = "the " + info->control_type.value_or("control") + " \"" + *info->control_text + "\"";
  } else if (auto label = a.args.control_label()) {
    target = "the control with label " + std::to_string(*label);
  } else if (auto c = a.args.coordinate()) {
    target = "screen position (" + std::to_string(c->x) + ", " + std::to_string(c->y) + ")";
  }
  std::string out;
  if (a.function == "click") {
    out = "Click " + (target.empty() ? std::string("the current focus") : target);
    if (auto b = a.args.button()) out += " with the " + *b + " mouse button";
  } else if (a.function == "type") {
    out = "Type \"" + a.args.keys().value_or(a.args.text().value_or("")) + "\"";
    if (!target.empty()) out += " into " + target;
    if (a.args.clear_current_text().value_or(false)) out += ", replacing the existing text";
  } else if (a.function == "drag") {
    auto s = a.args.start_coordinate().value_or(Point{});
    auto e = a.args.end_coordinate().value_or(Point{});
    out = "Drag from (" + std::to_string(s.x) + ", " + std::to_string(s.y) + ") to (" + std::to_string(e.x) + ", " +
          std::to_string(e.y) + ")";
  } else if (a.function == "select_text") {
    out = "Select the text \"" + a.args.text().value_or("") + "\"";
  } else {
    out = "Invoke " + a.function + " with arguments " + a.args.json().dump();
    if (!target.empty()) out += " on " + target;
  }
  out += a.status == ActionStatus::Finish ? "; the task is then complete." : ".";
  return out;
}

inline constexpr std::string_view kDefaultSupportedActions =
    "click(control_label: int | null, coordinate: [x, y] | null, button: str)\n"
    "type(control_label: int | null, coordinate: [x, y] | null, keys: str, clear_current_text: bool)\n"
    "drag(start_coordinate: [x, y], end_coordinate: [x, y], button: str)\n"
    "select_text(text: str)\n"
    "wheel_mouse_input(control_label: int | null, coordinate: [x, y] | null, wheel_dist: int)";

}  // namespace wmbench
