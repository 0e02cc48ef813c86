#pragma once

// Generated from assets/prompts/*.txt; the prompt_assets test keeps the two in sync.

#include <string_view>

namespace wmbench::prompt_text {

inline constexpr std::string_view kOptionGenerationTemplate = R"WMP(You are an expert in Office Application automation and graphical user interfaces with accessibility support.

You will be provided with the following inputs:

1. **Current screenshot**: An image of the current state of an Office Application.
2. **Annotated current screenshot**: The same screenshot annotated with numeric markers corresponding to accessibility elements.2. **Annotated current screenshot**: The same screenshot annotated with numeric markers corresponding to accessibility elements.
3. **Accessibility (a11y) information**: This includes a list of control element labels and the textual name of the currently active Office Application.
4. **Task instruction**: A description of the action or goal to be completed.
5. **Supported actions**: A list of all actions that can be performed in this environment.

The annotated screenshot contains numbers that correspond directly to entries in the accessibility information. Each number identifies a specific UI control element, allowing you to reliably locate and reference interface components.

The accessibility information contains control labels that correspond to UI control elements in the current screenshot, allowing you to locate and reference specific interface components.

Your objective is to generate multiple diverse and plausible next actions that could be taken to accomplish the given task instruction, based on the current screenshot of the Office Application, the annotated current screenshot, and the available accessibility information. The desired number of options will be specified in the user instructions or input.

Use all the provided information-including the current screenshot, annotated screenshot, accessibility data, task instruction, and supported actions-to reason about the next appropriate actions accurately.


**IMPORTANT: When possible, prioritize using control_label over coordinate for actions. Control labels refer to unique identifiers provided by the accessibility (a11y) system for UI elements (such as buttons, text fields, or menu items). These identifiers are more reliable and accessible than raw screen coordinates, which may vary across layouts, resolutions, or UI states.**

For each candidate action, explain your reasoning process-describe how you analyze the current screenshot and the annotated screenshot, interpret the accessibility information, understand the current UI state, and determine what action could be taken next to move toward completing the task instruction.

Then, output the next actions in JSON format as a JSON array. Each element of the array must be an object with the keys "thoughts" and "tool_call". Both fields MUST be present in every element.

Please think very hard and carefully about the current state and the task instruction before making a decision, and output your reasoning in each element's "thoughts" field as detailed as possible, including:
- Your analysis of the current screenshot and annotated screenshot
- Your interpretation of the accessibility information
- How you identified the target control using control labels or visual elements
- The reason for your tool call and argument selection
- Your assessment of task progress based on the current state

The "tool_call" field in each element should contain:
- "function": str, The function/action type to execute
- "args": Dict, The arguments/parameters for the function
- "status": str, The status after performing this action (either "CONTINUE" or "FINISH")

For click operations, prioritize control_label over coordinate:
```json
{
  "thoughts": "The screenshot shows an Excel spreadsheet. From the accessibility information, there is a Save button with control_label=15. Using the control_label provides a more reliable interaction than estimating screen coordinates.",
  "tool_call": {
    "function": "click",
    "args": {"control_label": 15, "coordinate": null, "button": "left"},
    "status": "CONTINUE"
  }
}
````

If control_label is not available, fall back to coordinate:

```json
{
  "thoughts": "The target UI element does not have a corresponding control_label in the accessibility information. Based on the visual analysis of the annotated screenshot, I estimate the appropriate screen coordinates to interact with it.",
  "tool_call": {
    "function": "click",
    "args": {"control_label": null, "coordinate": [150, 30], "button": "left"},
    "status": "CONTINUE"
  }
}
```

For type operations, prioritize control_label over coordinate:

```json
{
  "thoughts": "The accessibility information indicates a text input field with control_label=8. Typing via the control_label ensures the correct field is targeted.",
  "tool_call": {
    "function": "type",
    "args": {"control_label": 8, "coordinate": null, "keys": "Hello World", "clear_current_text": true},
    "status": "CONTINUE"
  }
}
```

For drag operations, coordinates are required:

```json
{
  "thoughts": "This task requires dragging an element from one location to another. Drag actions require explicit start and end coordinates to describe the spatial movement.",
  "tool_call": {
    "function": "drag",
    "args": {"start_coordinate": [100, 100], "end_coordinate": [200, 200], "button": "left"},
    "status": "CONTINUE"
  }
}
```

If you think the task is finished, output status as "FINISH":

```json
{
  "thoughts": "Based on the current state of the Office Application and the task instruction, no further actions are required.",
  "tool_call": {
    "function": "",
    "args": {},
    "status": "FINISH"
  }
}
```

Only **ONE** action should be taken per option. You may output multiple options (as requested by num_options), but each option must correspond to exactly one action. If the task instruction could apply to multiple elements, choose the most relevant one for each option based on the current screenshot and accessibility information, and ensure the options are diverse.

Your response MUST be a valid JSON array with no additional text outside the JSON structure.

Task instruction:
{instruction}

Accessibility Information:
{a11y}

Supported actions:
{actions}

The current screenshot and the annotated current screenshot are provided as images.

Please analyze the current state using both visual information and accessibility data to generate {num_options} diverse and plausible next actions that could be taken to move toward completing the task instruction.

Please provide your reasoning and the next actions below in JSON array format without any additional text.
)WMP";

inline constexpr std::string_view kActionSelectionTemplate = R"WMP(
You are an AI assistant tasked with selecting the best next action in an Office application (e.g., Microsoft Word, Excel, or PowerPoint) based on a GUI screenshot and several candidate action outcomes.

The task instruction is:
[Instruction]

The current screenshot is: See the image below.

[Current State Screenshot]

You are given a list of action options, each with:
- action: the structured action command to be executed
- predicted_state_image: a visual prediction (mockup) showing the expected GUI state after executing the action

The `predicted_state` fields are simulations. Use them as references, but **ignore diffusion artifacts** (e.g., garbled text, noisy details). If a prediction is unreliable or inconsistent with the task, you may ignore it.

### Analysis Instructions:
1. **Analyze Every Option:** specific `predicted_state` simulations (images/text) are provided for every action. You must look at all of them first.
2. **When to use the World Model:**
   - **Uncertainty:** Use the predicted image when you are uncertain based purely on the action name or your internal knowledge.
   - **Discovery:** Use the predicted image if it clearly shows a better way of advancing the goal that you didn't initially think of.
   - **Efficiency:** Use the predicted image if it shows a way to skip intermediary steps and advance to the goal faster.
3. **Decide:** Combine your internal knowledge with these visual signals to pick the single best action.


Please return your final answer as a JSON object with the following format:
{
  "action_idx": <index of selected action>,
  "thought": "<brief explanation of why this action was selected>"
}
Do NOT include anything else outside the JSON object.
Here are the candidate action options:

Action Option 1:
 - Action:
 - Predicted State Image: see below.
[Predicted Image 1]

Action Option 2:
 - Action:
 - Predicted State Image: see below.
[Predicted Image 2]

Action Option 3:
 - Action: 
 - Predicted State Image: see below.
[Predicted Image 3]

Action Option 4:
 - Action: 
 - Predicted State Image: see below.
[Predicted Image 4]

Action Option 5:
 - Action: 
 - Predicted State Image: see below.
[Predicted Image 5]

Now, analyze all options and return only the selected 'action_idx' and a short 'thought' in JSON format. 'action_idx' MUST be an integer between 1 and 5 (inclusive). Do NOT output any text outside the JSON object.

)WMP";

inline constexpr std::string_view kTextualTransitionTemplate = R"WMP(Your task is to predict and describe the likely appearance of the Next UI Screenshot, with a strong emphasis on how the UI would change compared to the current state, and where these changes would be located within the interface.

You are acting as a World Model assistant for Office applications such as {app_name}. Your output will be used by a text-to-image model to accurately reproduce the predicted Next UI Screenshot, while clearly encoding the UI transition from the previous state.

You are provided with:
- A screenshot of the current Office UI, which defines the baseline state
- A structured user action, provided for contextual grounding
- A function-level description of the GUI action and its arguments, provided for semantic reference

Important:
- The Next UI Screenshot is not available; you must generate a plausible prediction of what it would look like.
- Use the current screenshot to understand the baseline state.
- The user action and GUI description provide reference context for what changes are expected.
- Do not speculate beyond what would reasonably follow from the current UI and action.

---

Reference Information:

Current UI Screenshot:  
{image}

Action:  
{action}

GUI Action Description:  
{gui_description}

---

In your response, follow this structure:

1. Start by stating which Office application this is (e.g., "This is Microsoft PowerPoint.").
2. Briefly summarize the user interaction that would lead from the current UI to this predicted state, using the action only as context.
3. Predict and describe the Next UI Screenshot in a single coherent paragraph, explicitly highlighting how it would differ from the original screenshot, and specifying where those changes would likely occur.

When describing the UI, organize the description in a top-down order when applicable. Only describe changed parts; for unchanged elements, state explicitly (e.g., "Ribbon unchanged"):

- Title Bar (document name, window state, changes if any)
- Ribbon (active tab, visible groups, detailed controls and icons)
- Main Editing Area / Canvas (content, layout, selection state, unchanged or changed elements; emphasize position and alignment, e.g., center-aligned)
- Sidebar / Pane (opened, closed, or updated panels)
- Navigation Area (slide thumbnails, focus changes)
- Status Bar (zoom level, mode indicators)
- Dropdown / Popout (anchored to a specific control or cursor location, with its relative position and size explicitly described)

Explicitly indicate predicted changes and their locations using clear language, such as:
- "In the Ribbon, the 'Insert' tab is expected to become active..."
- "In the Main Editing Area, the text will likely change to 'Quarterly Report'..."
- "A new panel labeled 'Design Ideas' is likely to appear on the right sidebar..."

All visible text in the UI should be enclosed in double quotes (e.g., "Home", "File", "New Slide").

Ensure that your description:
- Clearly encodes the transition from the current UI to the next UI state
- Specifies where changes are likely to occur in the UI
- Uses terminology and layout conventions consistent with {app_name}

Do not include reasoning, internal thoughts, or references to the images as separate entities. Do not answer in bullet points.
Output a single paragraph of vivid, precise visual description suitable for text-to-image generation.
)WMP";

inline constexpr std::string_view kJudgeTemplate = R"WMP(You are an impartial LLM-as-a-Judge. Your task is to grade a model prediction (PRED) against the ground truth (GT) for describing the ``Next UI Screenshot'' of an Office application (e.g., Microsoft Word).

You MUST evaluate the following aspects independently:
1) App name
2) User action
3) Next-frame prediction:
   3.1) Title Bar
   3.2) Ribbon
   3.3) Main Editing Area / Canvas
   3.4) Sidebar / Pane
   3.5) Navigation Area
   3.6) Status Bar

Scoring rule for EACH aspect (use ONLY these values):
- 0   = completely incorrect / contradicts GT / missing when GT contains it
- 0.5 = partially correct: some key elements match, but has notable omissions or inaccuracies
- 1   = fully correct: matches GT on the key elements with no meaningful errors

Critical evaluation guidelines:
- Use GT as the single source of truth.
- Judge content fidelity, not writing quality.
- Be strict about factual UI elements (active tab name, document title, zoom 
- Penalize hallucinations: if PRED adds UI changes or elements not supported by GT, deduct in the relevant aspect(s).
- If GT does NOT mention a sub-area (e.g., Navigation Area), then:
  - If PRED also does not mention it -> score 1 (no contradiction).
  - If PRED claims a specific change/state that GT does not support -> score 0.5 or 0 depending on how strong/incorrect it is.
- When scoring 0.5 vs 1, treat the following as ``key elements'':
  - Title Bar: document name, saved/unsaved indicator, window state if mentioned
  - Ribbon: active tab, visible groups, important controls/menus if mentioned
  - Dropdown / Popout: presence, anchor, relative position, size, and visible content
  - Main Editing Area: the actual document text changes, formatting (bold/center-aligned), cursor/selection state, layout
  - Sidebar/Pane: which pane is open, its content list/state
  - Navigation Area: thumbnails/outline focus changes if present
  - Status Bar: page number, zoom, mode toggles (Track Changes, etc.)

Output format requirements:
- Output ONLY valid JSON.
- No markdown, no extra text.
- Include per-aspect scores.


Return JSON with exactly this structure:
{{
  "scores": {{
    "app_name": <0|0.5|1>,
    "user_action": <0|0.5|1>,
    "title_bar": <0|0.5|1>,
    "ribbon": <0|0.5|1>,
    "main_editing_area": <0|0.5|1>,
    "sidebar_pane": <0|0.5|1>,
    "navigation_area": <0|0.5|1>,
    "status_bar": <0|0.5|1>
  }},
  "notes": {{
    "app_name": "<one short sentence rationale>",
    "user_action": "<one short sentence rationale>",
    "title_bar": "<one short sentence rationale>",
    "ribbon": "<one short sentence rationale>",
    "main_editing_area": "<one short sentence rationale>",
    "sidebar_pane": "<one short sentence rationale>",
    "navigation_area": "<one short sentence rationale>",
    "status_bar": "<one short sentence rationale>"
  }}
}}

Now perform the evaluation.

PRED:
<<<
{PRED}
>>>

GT:
<<<
{GT}
>>>
)WMP";

inline constexpr std::string_view kAcsNextActionTemplate = R"WMP(You are operating {app_name}. Decide the single next action that advances the task instruction.

Task instruction:
{instruction}

Description of the current UI state:
{description}

Accessibility Information:
{a11y}

{screenshot_note}

Supported actions:
{actions}

Return exactly one JSON object with the keys "function", "args" and "status". The "status" value is "CONTINUE" or "FINISH". Prefer control_label over coordinate when the accessibility information lists the target control. Do not output any text outside the JSON object.
)WMP";

}  // namespace wmbench::prompt_text
