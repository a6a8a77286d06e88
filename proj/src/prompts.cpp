// Copyright 2026 The chartcf Authors.
// SPDX-License-Identifier: Apache-2.0

#include "chartcf/prompts.hpp"

#include <set>

#include "chartcf/error.hpp"

namespace chartcf {

namespace {

constexpr std::string_view kDescriptiveBody = R"PROMPT(**Task:** Given a chart image, its plotting code, a descriptive question, and the current answer, modify the code so that the answer to the question becomes different. You should ONLY modify the element(s) directly responsible for the current answer.

## Requirements

- First assess whether you think you are capable of reasonably accomplishing this task
- Identify the specific data point(s) or element(s) that determine the current answer
- Modify ONLY those necessary elements to produce a different answer
- Do NOT change any other data points, labels, colors, or visual elements
- Do NOT change the final output/save path in the original code: it must remain 'rendered_images/{6-digit-number}.png', e.g., 'rendered_images/000002.png'.
- Do NOT modify the `set_random_seed` function or the random seed value it sets
- Ensure the modification is visually noticeable to human eyes (e.g., at least 15-25% change for numerical values)
- Provide the complete, executable Python code with your modifications, not just the changed parts

## Example (Omitting the Chart Image for Brevity)

## Example Input

**Plotting Code:**
```python
<example_original_code>
```

**Question:**
What is the title of the first subplot on the left?

**Current Answer:**
The title of the first subplot is 'Sculpture Wave Patterns'.

## Example Output

**Feasibility:**
YES

**Rationale of Modification:**
To change the title of the first subplot, we only need to modify the `ax1.set_title()` function that sets the title of the first subplot. This change will directly affect the current answer without impacting any other part of the code or plot. Changing the title satisfies the requirement of producing a visually noticeable difference.

**Modified Code:**
```python
<example_modified_code>
```

**New Answer:**
The title of the first subplot is 'Dynamic Wave Effects'.

## Input

**Plotting Code:**
```python
{{ python_code }}
```
**Question:**
{{ question }}

**Current Answer:**
{{ current_answer }}

## Output Format

**Feasibility:**
[YES or NO - whether this task can be reasonably accomplished]

**Rationale of Modification:**
[If feasibility is YES: Briefly explain which element(s) you will modify and why this produces a different answer]
[If feasibility is NO: Briefly explain why]

**Modified Code:**
```python
[Your complete modified code here if feasible, otherwise write "None"]
```
**New Answer:**
[The new correct answer if feasible, otherwise write "None". Do NOT include words like "modified", "updated", "changed", or any reference to the modification process.]
)PROMPT";

constexpr std::string_view kReasoningBody = R"PROMPT(**Task:** Given a chart image, its plotting code, a reasoning question, and the current answer with reasoning process, modify the code so that the answer becomes different. You should ONLY modify the element(s) directly responsible for the current answer.

## Requirements

- First assess whether you think you are capable of reasonably accomplishing this task
- Identify the specific data point(s) or element(s) that determine the current answer
- Modify ONLY those necessary elements to produce a different answer with a reasoning process
- Do NOT change any other data points, labels, colors, or visual elements
- Do NOT change the final output/save path in the original code: it must remain 'rendered_images/{6-digit-number}.png', e.g., 'rendered_images/000002.png'.
- Do NOT modify the `set_random_seed` function or the random seed value it sets
- Ensure the modification is visually noticeable to human eyes (e.g., at least 15-25% change for numerical values)
- Provide the complete, executable Python code with your modifications, not just the changed parts

## Example (Omitting the Chart Image for Brevity)

### Example Input

**Plotting Code:**
```python
<example_original_code>
```
**Question:**
By how much does the mean revenue decrease from Q1 to Q2?

**Current Answer:**
Reasoning Process: The mean revenue for Q1 is 15.3 and for Q2 it is 11.9. The decrease is calculated as 15.3 - 11.9 = 3.4.
Answer: 3.4

### Example Output

**Feasibility:**
YES

**Rationale of Modification:**
To change the answer, I will modify the mean revenue values for Q1 and/or Q2 in `revenue_means`. This adjustment will directly change the mean revenue values displayed in the chart without affecting other elements of the visualization.

**Modified Code:**
```python
<example_modified_code>
```
**New Answer:**
Reasoning Process: The mean revenue for Q1 is 19.1 and for Q2 it is 10.2. The decrease is calculated as 19.1 - 10.2 = 8.9.
Answer: 8.9

## Input

**Plotting Code:**
```python
{{ python_code }}
```
**Question:**
{{ question }}

**Current Answer:**
Reasoning Process: {{ current_reasoning_process }}
Answer: {{ current_answer }}

## Output Format

**Feasibility:**
[YES or NO - whether this task can be reasonably accomplished]

**Rationale of Modification:**
[If feasibility is YES: Briefly explain which element(s) you will modify and why this produces a different answer]
[If feasibility is NO: Briefly explain why]

**Modified Code:**
```python
[Your complete modified code here if feasible, otherwise write "None"]
```
**New Answer:**
Reasoning Process: [If feasible, provide step-by-step reasoning that leads to the new answer, Otherwise write "None". Do NOT include words like "modified", "updated", "changed", or any reference to the modification process.]
Answer: [The new correct answer if feasible, otherwise write "None". Do NOT include words like "modified", "updated", "changed", or any reference to the modification process.]
)PROMPT";

constexpr std::string_view kSimilarityBody = R"PROMPT(You are an expert at evaluating visualization chart plots. You will be given two python-generated chart images:
- **Original Image**: The chart before code modification
- **Modified Image**: The chart after code modification
Your task is to assess the similarity between the two chart images.

### Scoring Criteria:
Evaluate the similarity between the two images based on the following criteria, totaling 100 points:

1. **Chart Types (20 points):** How similar are the chart types (e.g., line charts, bar charts, scatter plots, etc.) between the two images?
2. **Layout (20 points):** How similar is the arrangement of subplots (e.g., number of rows and columns, spacing) between the two images?
3. **Text Content (20 points):** How similar are the titles, annotations, axis labels, and other text elements (excluding axis tick labels) between the two images?
4. **Data (20 points):** How closely do the data trends, patterns, and the number of data groups match between the two images?
5. **Style (20 points):** How similar are the colors, line styles, marker types, legends, grids, and other stylistic details between the two images?

### Evaluation:
Compare the two images head to head and provide a detailed assessment. Use the following format for your response:


---

Comments:
- Chart Types: {your comment and subscore}
- Layout: {your comment and subscore}
- Text Content: {your comment and subscore}
- Data: {your comment and subscore}
- Style: {your comment and subscore}

Score: {your final score out of 100}

---

Please use the above format to ensure the evaluation is clear and comprehensive.
)PROMPT";

struct SlotMarker {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::string name;
};

// Finds `{{ name }}` markers; whitespace inside the braces is optional.
std::vector<SlotMarker> find_slots(std::string_view body) {
  std::vector<SlotMarker> slots;
  std::size_t pos = 0;
  while ((pos = body.find("{{", pos)) != std::string_view::npos) {
    const std::size_t close = body.find("}}", pos + 2);
    if (close == std::string_view::npos) break;
    std::string_view inner = body.substr(pos + 2, close - pos - 2);
    const auto first = inner.find_first_not_of(" \t");
    const auto last = inner.find_last_not_of(" \t");
    std::string name;
    if (first != std::string_view::npos) {
      name = std::string(inner.substr(first, last - first + 1));
    }
    const bool identifier =
        !name.empty() &&
        name.find_first_not_of("abcdefghijklmnopqrstuvwxyz_") ==
            std::string::npos;
    if (identifier) {
      slots.push_back({pos, close + 2, name});
      pos = close + 2;
    } else {
      pos += 2;
    }
  }
  return slots;
}

}  // namespace

std::string to_string(TemplateKind kind) {
  switch (kind) {
    case TemplateKind::kDescriptive: return "descriptive";
    case TemplateKind::kReasoning: return "reasoning";
    case TemplateKind::kDistractor: return "distractor";
  }
  return "unknown";
}

std::set<std::string> PromptTemplate::slots() const {
  std::set<std::string> names;
  for (const auto& marker : find_slots(body)) names.insert(marker.name);
  return names;
}

PromptTemplate descriptive_template() {
  return {TemplateKind::kDescriptive, std::string(kDescriptiveBody)};
}

PromptTemplate reasoning_template() {
  return {TemplateKind::kReasoning, std::string(kReasoningBody)};
}

PromptTemplate default_template_for(QuestionType type) {
  return type == QuestionType::kReasoning ? reasoning_template()
                                          : descriptive_template();
}

std::string_view similarity_prompt() { return kSimilarityBody; }

std::string render_prompt(const PromptTemplate& tmpl, const SeedSample& seed) {
  std::string out;
  out.reserve(tmpl.body.size() + seed.code.size() + 256);
  std::size_t cursor = 0;
  for (const auto& marker : find_slots(tmpl.body)) {
    out.append(tmpl.body, cursor, marker.begin - cursor);
    if (marker.name == "python_code") {
      out += seed.code;
    } else if (marker.name == "question") {
      out += seed.question;
    } else if (marker.name == "current_answer") {
      out += seed.answer;
    } else if (marker.name == "current_reasoning_process") {
      if (!seed.reasoning || seed.reasoning->empty()) {
        throw Error(ErrorCode::kMissingSlot,
                    "seed " + seed.id + " has no reasoning process for the " +
                        to_string(tmpl.kind) + " template");
      }
      out += *seed.reasoning;
    } else {
      throw Error(ErrorCode::kMissingSlot,
                  "template references unknown slot '" + marker.name + "'");
    }
    cursor = marker.end;
  }
  out.append(tmpl.body, cursor, std::string::npos);
  return out;
}

}  // namespace chartcf
