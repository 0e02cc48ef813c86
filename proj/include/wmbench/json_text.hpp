#pragma once

// Helpers for pulling structured documents out of model responses.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace wmbench {

inline std::string_view trim_ascii(std::string_view s) {
  auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

/// Removes one surrounding ``` fence (with an optional info string such as
/// `json`). Text that is not wrapped exactly once is returned trimmed but
/// otherwise untouched.
inline std::string strip_code_fence(std::string_view text) {
  std::string_view t = trim_ascii(text);
  if (t.size() < 6 || t.substr(0, 3) != "```" || t.substr(t.size() - 3) != "```") {
    return std::string(t);
  }
  std::string_view inner = t.substr(3, t.size() - 6);
  // The info string runs to the end of the first line.
  auto nl = inner.find('\n');
  if (nl == std::string_view::npos) return std::string(t);
  std::string_view info = inner.substr(0, nl);
  for (char c : info) {
    if (c == '`' || c == '{' || c == '[') return std::string(t);
  }
  inner.remove_prefix(nl + 1);
  // A second fence inside means this was not a single wrapped block.
  if (inner.find("```") != std::string_view::npos) return std::string(t);
  return std::string(trim_ascii(inner));
}

/// Finds the first balanced JSON value starting with `open` ('{' or '['),
/// honouring string literals and escapes. Returns the raw slice; the caller
/// still has to parse it.
inline std::optional<std::string> find_balanced(std::string_view text, char open, std::size_t from = 0) {
  const char close = open == '{' ? '}' : ']';
  for (std::size_t start = text.find(open, from); start != std::string_view::npos;
       start = text.find(open, start + 1)) {
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = start; i < text.size(); ++i) {
      char c = text[i];
      if (in_string) {
        if (escaped) {
          escaped = false;
        } else if (c == '\\') {
          escaped = true;
        } else if (c == '"') {
          in_string = false;
        }
        continue;
      }
      if (c == '"') {
        in_string = true;
      } else if (c == '{' || c == '[') {
        ++depth;
      } else if (c == '}' || c == ']') {
        --depth;
        if (depth == 0) {
          if (c != close) break;
          return std::string(text.substr(start, i - start + 1));
        }
      }
    }
  }
  return std::nullopt;
}

/// First slice of `text` that is a balanced `open`-delimited value and parses
/// as JSON. Prose before or after the value is ignored.
inline std::optional<nlohmann::ordered_json> first_json_value(std::string_view text, char open) {
  std::size_t from = 0;
  while (from < text.size()) {
    auto slice = find_balanced(text, open, from);
    if (!slice) return std::nullopt;
    auto parsed = nlohmann::ordered_json::parse(*slice, nullptr, /*allow_exceptions=*/false);
    if (!parsed.is_discarded()) return parsed;
    std::size_t at = text.find(*slice, from);
    from = at + 1;
  }
  return std::nullopt;
}

}  // namespace wmbench
