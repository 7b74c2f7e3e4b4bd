#pragma once

// Prompt templates for every LLM-driven stage.
//
// The four generation/extraction templates are fixed text with
// `{{ text }}` / `{{ concept }}` placeholders; the same strings also live
// under prompts/ as plain-text assets (a unit test keeps the two copies
// identical).  Each template contains a distinctive sentinel phrase that
// the mock backend uses to recognize the prompt family.

#include <map>
#include <string>
#include <string_view>

#include "synthweave/common.hpp"

namespace synthweave {
namespace prompts {

// Level-1: direct question extraction/creation from one document.
inline constexpr std::string_view kLevel1 =
    R"PROMPT(Here is an article crawl from the web, which our classifier has identified as having significant educational value for students learning math.

As a senior **math** instructor, your task is to create **challenging computation-based math questions**. These questions should be suitable for various contexts, such as homework assignments, exams, interview preparations, classroom activities, competitions, and tutoring sessions while enhancing students' reasoning and critical-thinking skills. Ensure that questions are **non-redundant**, precise, and engaging.

### Guidelines for Creating Computation-based Questions:

1. **Assess Suitability**: If this article does not contain math-related content that can be used to generate engaging and solvable questions, please directly output "NOT SUITABLE for creating questions."

2. **Generate Questions**: If the article is suitable for creating math questions, generate **1 to 5** questions based on the richness and depth of the article content. For articles covering multiple topics, aim to generate more questions to ensure coverage:
    - Each question must be solvable independently and should not rely on answers from previous questions.
    - If a question closely resembles the original text, append "<original_question>" at the end of the question.
    - If a question is newly created, append "<newly_created>" at the end of the question.

3. **Content Alignment**: Your math questions must exclusively draw from the content of the article, ensuring they are directly aligned with the concepts presented.

4. **Use Original Questions**: Use original questions from the article whenever possible. However, feel free to rephrase them for clarity and improved understanding.

5. **Create New Questions**: Attempt to formulate **newly diverse and challenging questions** that explore different aspects of the content presented in the article.

6. **Self-Contained Questions**: Ensure that each question is self-contained, meaning students do not need to read the article to answer them.

7. **Logical Consistency**: Verify that the questions are **logically sound and directly aligned with the mathematical principles** in the article. You MUST minimize the use of **sub-questions**, unless they are essential to the problem's complexity.

8. **Clarity and Precision**:
    - Use precise and unambiguous language.
    - Write all mathematical expressions or formulas in LaTeX for clarity.
    - Clearly state all assumptions or conditions.
    - The answer should either be exact, or if not possible, then the question should clearly say the answer is only expected to be approximately correct.

#### Article
{{ text }}

#### Output Format
For each question, provide the following information:
- **Question Content**: The actual math question.
- **School Level**: Specify the school level (e.g., <elementary>, <middle_school>, <high_school>, <college>, <grad_school>, <competition>).
- **Originality Tag**: Append "<original_question>" for original questions from the article or"<newly_created>" for newly created questions.

Example Output:
<Q1>
Question: Content
Orig_tag:<original_question>
Level:<high_school>
</Q1>
<Q2>
Question: Content
Orig_tag:<newly_created>
Level:<college>
</Q2>
)PROMPT";

// Level-2: concept-recombination questions within one document.
inline constexpr std::string_view kLevel2 =
    R"PROMPT(As a senior **math** instructor, your task is to create **diverse and challenging computation-based math questions**. These questions should demonstrate the application of the provided topics and key concepts while enhancing students' reasoning and critical-thinking skills. Ensure that questions are **non-redundant**, precise, and engaging.

### Guidelines for Creating Diverse and Challenging Computation-based Questions:
1. **Concept Selection**:
    - Randomly select **up to 2-3 distinct key concepts** from the provided list for each question.
    - Ensure **broad coverage** of the provided concepts across the generated questions, avoiding over-relianceon a limited subset of concepts.
    - Avoid repeating the same **concept combinations** or **computational approach** across questions.
2. **Diversity and Challenge**:
    - Ensure that each question explores **different combinations of key concepts** and is **sufficiently challenging** (e.g., requiring multi-step computations, integrating real-world scenarios, involving abstract or advanced reasoning.).
3. **Clarity and Precision**:
    - Verify that the questions are **logically sound**.
    - Use precise and unambiguous language.
    - Write all mathematical expressions or formulas in LaTeX for clarity.
    - Clearly state all assumptions or conditions.
4. **Reference Material**:
    - Use the provided **reference article** as a source of inspiration for generating **unique, diverse, and challenging questions**.
    - The reference material is intended to:
      - Supplement the concept list by introducing **novel perspectives**, **contexts**, or **applications**.
      - Help create questions that are **more complex, realistic, or uncommon** in traditional teaching scenarios.
      - Serve as a resource to craft **real-world scenarios** or **abstract extensions** beyond the given concepts.
5. **Output Diversity**:
    - Create between **1 to 5 questions**.
    - Ensure each question is unique in **structure**, **approach**, and **concept usage**.
    - Minimize the use of **sub-questions**, unless they are essential to the problem's complexity.
    - The answer should either be exact, or if not possible, then the question should clearly say the answer is only expected to be approximately correct.

### Inputs:
- **Article**:
    {{ text }}
- **Concept List**:
    {{ concept }}

#### Output Format:
<Q1>
Selected Concepts: [Only insert 2-3 concepts here]
Question: [Only insert question here]
</Q1>
<Q2>
Selected Concepts: [Only insert 2-3 concepts here]
Question: [Only insert question here]
</Q2>
)PROMPT";

// Level-3: cross-document questions from graph-sampled concepts plus two
// grounding articles.
inline constexpr std::string_view kLevel3 =
    R"PROMPT(As a senior **math** instructor, your task is to create **diverse and challenging computation-based math questions** based on provided topics and knowledge points. These questions should demonstrate the application of the provided topics and key concepts while enhancing students' reasoning and critical-thinking skills. Ensure that questions are **non-redundant**, precise, and engaging.

You will be provided with a list of key mathematical concepts spanning various topics and two relevant reference materials.

### Guidelines for Creating Diverse and Challenging Computation-based Questions:
1. **Concept Selection**:
    - Adhere to the Provided Topics: Ensure that each question aligns closely with the given topics.
    - Incorporate Multiple Concepts about Different Topics: Each question should encompass **2 or 3 key concepts about different math topics**.
    - Ensure **broad coverage** of the provided concepts across the generated questions, avoiding **over-reliance** on simple or common applications of concepts.
    - Avoid repeating the same **concept combinations** or **computational approach** across questions.
2. **Diversity and Challenge**:
    - Encourage **Cross-Topic Thinking**: By integrating concepts about different math topics, questions will promote holistic understanding and application of mathematical principles.
    - **Leverage the Two Reference Materials**: The combination of both reference materials provides a **broader and more diverse context**, allowing for the creation of questions that explore a wider range of scenarios and applications. Use this to generate questions that challenge students in both familiar and novel contexts.
    - Ensure questions explore **different perspectives** and **applications** of the key concepts. Ensure each question is **sufficiently challenging** (e.g., requiring multi-step computations, integrating real-world scenarios, involving abstract or advanced reasoning.).
3. **Clarity and Precision**:
    - Use precise and unambiguous language.
    - Write all mathematical expressions or formulas in LaTeX for clarity.
    - Clearly state all assumptions or conditions.
4. **Reference Material**:
    - Use the provided **reference articles about different topics** as sources of inspiration for generating **unique, diverse, and challenging questions**.
    - The combination of these two materials allows you to create questions with **more varied perspectives, contexts, and applications**, which can help test students' abilities to apply concepts in different situations.
    - The reference material is intended to:
      - Supplement the concept list by introducing **novel perspectives**, **contexts**, or **applications**.
      - Help create questions that are **more complex, much harder, and uncommon** in traditional teaching scenarios.
      - Serve as a resource to craft **real-world scenarios** or **abstract extensions** beyond the given concepts.
5. **Output Diversity**:
    - Create between **1 to 3 questions**.
    - Ensure each question is unique in **structure**, **approach**, and **concept usage**.
    - Minimize the use of **sub-questions**, unless they are essential to the problem's complexity.
    - The answer should either be exact, or if not possible, then the question should clearly say the answer is only expected to be approximately correct.

### Inputs:
- **Article**:
    {{ text }}
- **Concept List**:
    {{ concept }}

#### Output Format:
<Q1>
Selected Concepts: [Only insert 2-3 concepts here]
Question: [Only insert question here]
</Q1>
<Q2>
Selected Concepts: [Only insert 2-3 concepts here]
Question: [Only insert question here]
</Q2>
)PROMPT";

// Topic / key-concept extraction from one document.
inline constexpr std::string_view kConceptExtraction =
    R"PROMPT(Here is an article crawl from the web, which our classifier has identified as having significant educational value for students learning math.

Your task is to analyze this article and extract educational materials, specifically focusing on topics and key concepts that can enhance students' understanding of mathematics and improve their problem-solving skills.

Pay special attention to uncommon but important mathematical concepts that are crucial for a deeper understanding.

## Tasks

1. **Determine Educational Level:**
    - Identify the appropriate educational level for the article based on its content. Choose from the following options:
      - Primary School
      - Middle School
      - High School
      - College
      - Graduate School
      - Competition
      - Other

2. **Identify Subject Area:**
    - Specify the primary subject area of mathematics to which the article belongs (e.g., Calculus, Geometry, Algebra, etc.).

3. **Extract Topics and Key Concepts:**
    - **Topics:**
      - List **1 to 5** main topics covered in the article.
      - Use terms commonly recognized in academia or industry.
    - **Key Concepts:**
      - For each identified topic, list **5 to 20** related key concepts.
      - Ensure these concepts are clearly articulated using standard academic or industry terms.

## Guidelines:
- **Terminology:** Use precise and widely recognized academic or industry terminology for subjects, topics, and key concepts to maintain consistency and clarity.
- **Educational Level Selection:** If appropriate, restrict the educational level to one of the following: "Primary School", "Middle School", "High School", "College", "Graduate School", or "Competition" to ensure accurate categorization.

## Text
{{ text }}

## Output Format
<level>Educational Level</level>
<subject>Subject Area</subject>

<topic>
Topics:
1. topic 1
2. topic 2
</topic>

<key_concept>
Key Concepts:
1. topic 1:
    1.1. key concept
    1.2. key concept
    ...
2. topic 2:
    2.1. key concept
    ...
...
</key_concept>

## Output
)PROMPT";

// Judge prompt for the fine-grained document scorer (1-10 rating).
inline constexpr std::string_view kRating =
    R"PROMPT(You are grading a web document for use as math training material.

Rate the following document on a 1-10 scale for its value as a source of math practice questions, considering relevance to the target domain, clarity, and language quality.  Use the full scale: 1 means useless, 10 means an exemplary reference document.

## Document
{{ text }}

## Output Format
Reply with exactly one line containing the integer score wrapped in tags, for example <score>7</score>.  Do not add any other text.
)PROMPT";

// Answer-generation prompt.
inline constexpr std::string_view kAnswer =
    R"PROMPT(As an expert math tutor, provide a complete step-by-step solution to the question below.  Reason carefully, show the key intermediate computations, and state the final answer clearly on the last line.

## Question
{{ text }}
)PROMPT";

// Sentinel substrings used by the mock backend to recognize the family of
// an incoming prompt.  Each must occur in exactly one template above.
inline constexpr std::string_view kLevel1Sentinel = "**Assess Suitability**";
inline constexpr std::string_view kLevel2Sentinel =
    "Randomly select **up to 2-3 distinct key concepts**";
inline constexpr std::string_view kLevel3Sentinel =
    "two relevant reference materials";
inline constexpr std::string_view kConceptSentinel =
    "**Determine Educational Level:**";
inline constexpr std::string_view kRatingSentinel =
    "Rate the following document on a 1-10 scale";
inline constexpr std::string_view kAnswerSentinel =
    "provide a complete step-by-step solution";

// Replaces every `{{ key }}` placeholder with its mapped value.  Unknown
// placeholders are an error (catches template/caller drift); keys without
// a placeholder are ignored.
inline std::string render(std::string_view tpl,
                          const std::map<std::string, std::string>& vars) {
  std::string out;
  out.reserve(tpl.size());
  std::size_t pos = 0;
  while (pos < tpl.size()) {
    std::size_t open = tpl.find("{{", pos);
    if (open == std::string_view::npos) {
      out.append(tpl.substr(pos));
      break;
    }
    std::size_t close = tpl.find("}}", open + 2);
    if (close == std::string_view::npos)
      throw ParseError("prompt template: unterminated '{{' placeholder");
    out.append(tpl.substr(pos, open - pos));
    std::string key(tpl.substr(open + 2, close - open - 2));
    // trim surrounding spaces inside the braces
    std::size_t b = key.find_first_not_of(' ');
    std::size_t e = key.find_last_not_of(' ');
    key = (b == std::string::npos) ? std::string() : key.substr(b, e - b + 1);
    auto it = vars.find(key);
    if (it == vars.end())
      throw ArgumentError("prompt template: no value for placeholder '" +
                          key + "'");
    out.append(it->second);
    pos = close + 2;
  }
  return out;
}

}  // namespace prompts
}  // namespace synthweave
