#pragma once

// Prompt rendering. Templates are kept byte-identical to the shipped assets;
// rendering only substitutes placeholders and splits the text at image slots
// so chat dialects can attach images inline.

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wmbench/a11y.hpp"
#include "wmbench/action.hpp"
#include "wmbench/digest.hpp"
#include "wmbench/error.hpp"
#include "wmbench/image.hpp"
#include "wmbench/prompt_assets.hpp"
#include "wmbench/providers/contracts.hpp"

namespace wmbench {

namespace template_id {
inline constexpr std::string_view kOptionGeneration = "option_generation";
inline constexpr std::string_view kActionSelection = "action_selection";
inline constexpr std::string_view kTextualTransition = "textual_transition";
inline constexpr std::string_view kJudge = "judge";
inline constexpr std::string_view kAcsNextAction = "acs_next_action";
}  // namespace template_id

struct PromptPart {
  enum class Kind { Text, Image };
  Kind kind = Kind::Text;
  std::string text;
  ImageRef image;
};

struct RenderedPrompt {
  std::string template_id;
  std::vector<PromptPart> parts;

  /// Flattened text with images shown as "<image:path>" markers.
  std::string text() const {
    std::string out;
    for (const auto& p : parts) out += p.kind == PromptPart::Kind::Text ? p.text : "<image:" + p.image.path + ">";
    return out;
  }

  void add_text(std::string_view t) {
    if (t.empty()) return;
    if (!parts.empty() && parts.back().kind == PromptPart::Kind::Text) {
      parts.back().text += t;
    } else {
      parts.push_back({PromptPart::Kind::Text, std::string(t), {}});
    }
  }
  void add_image(const ImageRef& img) { parts.push_back({PromptPart::Kind::Image, {}, img}); }
};

inline std::string replace_all(std::string s, std::string_view from, std::string_view to) {
  if (from.empty()) return s;
  for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
  return s;
}

inline std::string_view template_text(std::string_view id) {
  if (id == template_id::kOptionGeneration) return prompt_text::kOptionGenerationTemplate;
  if (id == template_id::kActionSelection) return prompt_text::kActionSelectionTemplate;
  if (id == template_id::kTextualTransition) return prompt_text::kTextualTransitionTemplate;
  if (id == template_id::kJudge) return prompt_text::kJudgeTemplate;
  if (id == template_id::kAcsNextAction) return prompt_text::kAcsNextActionTemplate;
  fail(Errc::ConfigError, "unknown prompt template '" + std::string(id) + "'");
}

inline std::map<std::string, std::string> template_hashes() {
  std::map<std::string, std::string> out;
  for (auto id : {template_id::kOptionGeneration, template_id::kActionSelection, template_id::kTextualTransition,
                  template_id::kJudge, template_id::kAcsNextAction}) {
    out.emplace(std::string(id), sha256_hex(template_text(id)));
  }
  return out;
}

namespace detail {

/// Substitutes text placeholders, then splits at the single image
/// placeholder (if any) and attaches `image` there.
inline RenderedPrompt render_with_image_slot(std::string_view id, std::string body,
                                             std::string_view image_slot, const std::optional<ImageRef>& image) {
  RenderedPrompt out{std::string(id), {}};
  const std::size_t pos = image_slot.empty() ? std::string::npos : body.find(image_slot);
  if (pos == std::string::npos) {
    out.add_text(body);
    return out;
  }
  out.add_text(std::string_view(body).substr(0, pos));
  if (image) out.add_image(*image);
  out.add_text(std::string_view(body).substr(pos + image_slot.size()));
  return out;
}

}  // namespace detail

inline RenderedPrompt render_transition_prompt(const TransitionRequest& req) {
  std::string body(prompt_text::kTextualTransitionTemplate);
  body = replace_all(std::move(body), "{app_name}", req.app_name);
  body = replace_all(std::move(body), "{action}", serialize_action(req.action));
  body = replace_all(std::move(body), "{gui_description}", req.gui_description.value_or(""));
  return detail::render_with_image_slot(template_id::kTextualTransition, std::move(body), "{image}", req.screenshot);
}

inline RenderedPrompt render_judge_prompt(std::string_view pred, std::string_view gt) {
  std::string body(prompt_text::kJudgeTemplate);
  // Placeholders first so literal braces inside the texts survive unescaping.
  const std::string pred_mark = "\x01PRED\x01", gt_mark = "\x01GT\x01";
  body = replace_all(std::move(body), "{PRED}", pred_mark);
  body = replace_all(std::move(body), "{GT}", gt_mark);
  body = replace_all(std::move(body), "{{", "{");
  body = replace_all(std::move(body), "}}", "}");
  body = replace_all(std::move(body), pred_mark, pred);
  body = replace_all(std::move(body), gt_mark, gt);
  RenderedPrompt out{std::string(template_id::kJudge), {}};
  out.add_text(body);
  return out;
}

inline RenderedPrompt render_option_prompt(const AgentProposeRequest& req) {
  std::string body(prompt_text::kOptionGenerationTemplate);
  body = replace_all(std::move(body), "{instruction}", req.instruction);
  body = replace_all(std::move(body), "{a11y}", a11y_listing(req.a11y));
  body = replace_all(std::move(body), "{actions}", req.supported_actions);
  body = replace_all(std::move(body), "{num_options}", std::to_string(req.num_options));
  RenderedPrompt out{std::string(template_id::kOptionGeneration), {}};
  out.add_text(body);
  out.add_image(req.screenshot);
  if (req.annotated) out.add_image(*req.annotated);
  return out;
}

/// Variant id for the selection prompt; the text-only variant swaps each
/// option's image slot for the predicted transition paragraph.
inline std::string selection_variant(SearchMode mode) {
  return std::string(template_id::kActionSelection) + "/" + std::string(to_string(mode));
}

inline RenderedPrompt render_selection_prompt(const AgentSelectRequest& req) {
  const std::string_view tpl = prompt_text::kActionSelectionTemplate;
  const std::size_t first_option = tpl.find("Action Option 1:");
  const std::size_t tail_start = tpl.find("Now, analyze all options");
  if (first_option == std::string_view::npos || tail_start == std::string_view::npos) {
    fail(Errc::ConfigError, "selection template lost its option block markers");
  }
  std::string head(tpl.substr(0, first_option));
  head = replace_all(std::move(head), "[Instruction]", req.instruction);
  std::string tail(tpl.substr(tail_start));
  tail = replace_all(std::move(tail), "between 1 and 5", "between 1 and " + std::to_string(req.options.size()));

  RenderedPrompt out = detail::render_with_image_slot(selection_variant(req.mode), std::move(head),
                                                      "[Current State Screenshot]", req.screenshot);
  for (const auto& o : req.options) {
    out.add_text("Action Option " + std::to_string(o.index) + ":\n - Action: " + serialize_action(o.candidate.tool_call) + "\n");
    if (mode_uses_image(req.mode) && o.predicted_image) {
      out.add_text(" - Predicted State Image: see below.\n");
      out.add_image(*o.predicted_image);
      out.add_text("\n");
    }
    if (mode_uses_text(req.mode) && o.predicted_text) {
      out.add_text(" - Predicted State Text: " + *o.predicted_text + "\n");
    }
    out.add_text("\n");
  }
  out.add_text(tail);
  return out;
}

inline RenderedPrompt render_acs_prompt(const AgentActRequest& req, std::string_view supported_actions = kDefaultSupportedActions) {
  std::string body(prompt_text::kAcsNextActionTemplate);
  body = replace_all(std::move(body), "{app_name}", req.app_name);
  body = replace_all(std::move(body), "{instruction}", req.instruction);
  body = replace_all(std::move(body), "{description}", req.description);
  body = replace_all(std::move(body), "{a11y}", a11y_listing(req.a11y));
  body = replace_all(std::move(body), "{actions}", supported_actions);
  const std::string note = req.screenshot ? "The current screenshot is provided as an image: {screenshot}"
                                          : "No screenshot is available; rely on the description above.";
  body = replace_all(std::move(body), "{screenshot_note}", note);
  return detail::render_with_image_slot(template_id::kAcsNextAction, std::move(body), "{screenshot}", req.screenshot);
}

}  // namespace wmbench
