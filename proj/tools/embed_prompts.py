#!/usr/bin/env python3
"""Regenerates include/wmbench/prompt_assets.hpp from assets/prompts/*.txt."""
import pathlib

ROOT = pathlib.Path(__file__).resolve().parent.parent
FILES = [
    ("kOptionGenerationTemplate", "option_generation.txt"),
    ("kActionSelectionTemplate", "action_selection.txt"),
    ("kTextualTransitionTemplate", "textual_transition.txt"),
    ("kJudgeTemplate", "judge.txt"),
    ("kAcsNextActionTemplate", "acs_next_action.txt"),
]

out = [
    "#pragma once",
    "",
    "// Generated from assets/prompts/*.txt; the prompt_assets test keeps the two in sync.",
    "",
    "#include <string_view>",
    "",
    "namespace wmbench::prompt_text {",
    "",
]
for name, fname in FILES:
    text = (ROOT / "assets" / "prompts" / fname).read_text(encoding="utf-8")
    assert ')WMP"' not in text, fname
    out.append(f'inline constexpr std::string_view {name} = R"WMP({text})WMP";')
    out.append("")
out.append("}  // namespace wmbench::prompt_text")
(ROOT / "include" / "wmbench" / "prompt_assets.hpp").write_text("\n".join(out) + "\n", encoding="utf-8")
