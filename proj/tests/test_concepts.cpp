#include <gtest/gtest.h>

#include <string>
#include <vector>

#include "synthweave/concepts.hpp"
#include "synthweave/llmio.hpp"

using namespace synthweave;

namespace {

// Published example outputs for the extraction prompt, reproduced
// verbatim (tags, numbering, indentation).
const char* kTrigExample = R"(<level>High School</level>
<subject>Trigonometry</subject>

<topic>
Topics:
1. Trigonometric Functions and Identities
2. Geometry on a Sphere
3. Applications of Trigonometry
4. Complex Numbers and Trigonometry
5. Derivations and Proofs in Trigonometry
</topic>

<key_concept>
Key Concepts:
1. Trigonometric Functions and Identities:
    1.1. Sine, Cosine, and Tangent Functions
    1.2. Trigonometric Identities (e.g., Pythagorean, Co-function, Sum and Difference)
    1.3. Law of Sines and Law of Cosines
    1.4. Inverse Trigonometric Functions
    1.5. Trigonometric Equations and Their Solutions

2. Geometry on a Sphere:
    2.1. Latitude and Longitude
    2.2. Circumference of a Circle on a Sphere
    2.3. Equation of a Circle on a Sphere
    2.4. Spherical Trigonometry
    2.5. Haversine Formula for Distance Calculation

3. Applications of Trigonometry:
    3.1. Circular Motion and Angular Velocity
    3.2. Calculating Angles in Right Triangles
    3.3. Real-world Problems Involving Trigonometry (e.g., Crossing a Canyon)
    3.4. Computing Sine and Cosine without a Calculator
    3.5. Practical Uses of Trigonometric Functions in Engineering and Physics

4. Complex Numbers and Trigonometry:
    4.1. Euler's Formula and De Moivre's Theorem
    4.2. Complex Numbers and Trigonometric Functions
    4.3. Roots of Unity and Their Relationship to Trigonometry
    4.4. Inverse Hyperbolic Functions (e.g., Arcsinh)
    4.5. Complex Numbers in Trigonometric Identities

5. Derivations and Proofs in Trigonometry:
    5.1. Derivation of Trigonometric Identities
    5.2. Proof of the Law of Sines and Law of Cosines
    5.3. Derivation of Sum and Difference Formulas
    5.4. Proof of the Haversine Formula
    5.5. Derivation of Heron's Formula
</key_concept>
)";

const char* kVectorCalcExample = R"(<level>College</level>
<subject>Vector Calculus</subject>

<topic>
Topics:
1. Surface Integrals of Vector Fields
2. Oriented Surfaces
3. Unit Normal Vectors
4. Flux of a Vector Field
5. Parametric Surfaces
</topic>

<key_concept>
Key Concepts:
1. Surface Integrals of Vector Fields:
    1.1. Definition of surface integral of a vector field
    1.2. Flux of a vector field across a surface
    1.3. Application of surface integrals in fluid dynamics
    1.4. Evaluation of surface integrals using parametric surfaces
    1.5. Surface integrals over closed surfaces

2. Oriented Surfaces:
    2.1. Definition of an oriented surface
    2.2. Positive and negative orientations
    2.3. Unit normal vectors and their role in orientation
    2.4. Orientation conventions for closed surfaces
    2.5. Impact of orientation on surface integrals

3. Unit Normal Vectors:
    3.1. Definition and calculation of unit normal vectors
    3.2. Gradient vector and its role in finding normal vectors
    3.3. Normal vectors for surfaces given by z = f(x, y)
    3.4. Normal vectors for parametric surfaces
    3.5. Adjusting normal vectors to match desired orientation

4. Flux of a Vector Field:
    4.1. Definition of flux
    4.2. Physical interpretation of flux in fluid dynamics
    4.3. Calculation of flux using surface integrals
    4.4. Flux across closed surfaces
    4.5. Application of flux in Gauss's Law

5. Parametric Surfaces:
    5.1. Definition and representation of parametric surfaces
    5.2. Calculation of normal vectors for parametric surfaces
    5.3. Evaluation of surface integrals using parametric surfaces
    5.4. Parameterization of common surfaces (e.g., spheres, cylinders)
    5.5. Conversion between parametric and non-parametric forms
</key_concept>
)";

}  // namespace

TEST(EduLevel, StringRoundTrip) {
  const EduLevel levels[] = {EduLevel::primary_school, EduLevel::middle_school,
                             EduLevel::high_school,    EduLevel::college,
                             EduLevel::grad_school,    EduLevel::competition,
                             EduLevel::other};
  for (EduLevel l : levels)
    EXPECT_EQ(level_from_string(level_to_string(l)), l);
  EXPECT_EQ(level_from_string("High School"), EduLevel::high_school);
  EXPECT_EQ(level_from_string("elementary school"), EduLevel::primary_school);
  EXPECT_EQ(level_from_string("something new"), EduLevel::other);
}

TEST(ParseConceptOutput, TrigonometryExample) {
  ConceptSet cs = parse_concept_output(kTrigExample);
  EXPECT_EQ(cs.level, EduLevel::high_school);
  EXPECT_EQ(cs.subject, "Trigonometry");
  ASSERT_EQ(cs.topics.size(), 5u);
  EXPECT_EQ(cs.topics[0], "Trigonometric Functions and Identities");
  EXPECT_EQ(cs.topics[4], "Derivations and Proofs in Trigonometry");
  const std::vector<std::string>& g1 =
      cs.key_concepts.at("Trigonometric Functions and Identities");
  ASSERT_EQ(g1.size(), 5u);
  EXPECT_EQ(g1[2], "Law of Sines and Law of Cosines");
  EXPECT_EQ(cs.all_key_concepts().size(), 25u);
  for (const std::string& topic : cs.topics)
    EXPECT_EQ(cs.key_concepts.at(topic).size(), 5u);
}

TEST(ParseConceptOutput, VectorCalculusExample) {
  ConceptSet cs = parse_concept_output(kVectorCalcExample);
  EXPECT_EQ(cs.level, EduLevel::college);
  EXPECT_EQ(cs.subject, "Vector Calculus");
  ASSERT_EQ(cs.topics.size(), 5u);
  EXPECT_EQ(cs.topics[0], "Surface Integrals of Vector Fields");
  const std::vector<std::string>& g1 =
      cs.key_concepts.at("Surface Integrals of Vector Fields");
  ASSERT_EQ(g1.size(), 5u);
  EXPECT_EQ(g1[1], "Flux of a vector field across a surface");
  EXPECT_EQ(cs.all_key_concepts().size(), 25u);
}

TEST(ParseConceptOutput, RenderParseFixpoint) {
  ConceptSet cs = parse_concept_output(kTrigExample);
  cs.doc_id = "doc-7";
  std::string rendered = render_concept_block(cs);
  ConceptSet back = parse_concept_output(rendered);
  back.doc_id = cs.doc_id;
  EXPECT_EQ(back.level, cs.level);
  EXPECT_EQ(back.subject, cs.subject);
  EXPECT_EQ(back.topics, cs.topics);
  EXPECT_EQ(back.key_concepts, cs.key_concepts);
  // and rendering again is byte-stable
  EXPECT_EQ(render_concept_block(back), rendered);
}

TEST(ParseConceptOutput, StructuralErrors) {
  EXPECT_THROW(parse_concept_output("<level>College</level> no topic block"),
               ParseError);
  EXPECT_THROW(parse_concept_output("<topic>\nno numbered lines\n</topic>"),
               ParseError);
  EXPECT_THROW(parse_concept_output(
                   "<topic>\n1. Algebra\n2. Algebra\n</topic>"),
               ParseError);
  try {
    parse_concept_output(
        "<topic>\n1. Algebra\n</topic>\n<key_concept>\n6.1. Stray\n"
        "</key_concept>");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("6"), std::string::npos);
  }
}

TEST(ParseConceptOutput, ToleratesJunkAndEllipsis) {
  ConceptSet cs = parse_concept_output(
      "preamble chatter\n<level>middle school</level>\n<topic>\nTopics:\n"
      "1. Fractions\nsome stray prose\n2. Decimals\n...\n</topic>\n"
      "<key_concept>\n1. Fractions:\n    1.1. Adding fractions\n    ...\n"
      "    1.2. Adding fractions\n</key_concept>\ntrailing chatter");
  ASSERT_EQ(cs.topics.size(), 2u);
  // duplicate key concept collapsed by canonical match
  EXPECT_EQ(cs.key_concepts.at("Fractions").size(), 1u);
  EXPECT_TRUE(cs.key_concepts.find("Decimals") == cs.key_concepts.end() ||
              cs.key_concepts.at("Decimals").empty());
}

TEST(ConceptSet, JsonRoundTrip) {
  ConceptSet cs = parse_concept_output(kVectorCalcExample);
  cs.doc_id = "doc-42";
  json j = concept_set_to_json(cs);
  ConceptSet back = concept_set_from_json(j);
  EXPECT_EQ(back.doc_id, cs.doc_id);
  EXPECT_EQ(back.level, cs.level);
  EXPECT_EQ(back.subject, cs.subject);
  EXPECT_EQ(back.topics, cs.topics);
  EXPECT_EQ(back.key_concepts, cs.key_concepts);

  json bad = j;
  bad["key_concepts"]["Not A Topic"] = json::array({"x"});
  EXPECT_THROW(concept_set_from_json(bad), IntegrityError);
}

namespace {

// Returns malformed output for the first `bad_calls` requests.
class FlakyBackend : public ChatBackend {
 public:
  explicit FlakyBackend(int bad_calls) : bad_(bad_calls) {}
  std::string complete(const ChatRequest& req) override {
    last_prompt = req.user;
    ++calls;
    if (calls <= bad_) return "garbled output with no tags";
    return kTrigExample;
  }
  int calls = 0;
  std::string last_prompt;

 private:
  int bad_;
};

}  // namespace

TEST(ExtractConcepts, RendersPromptAndStampsDocId) {
  FlakyBackend backend(0);
  Document d;
  d.id = "doc-9";
  d.text = "A lesson on sine and cosine.";
  ConceptSet cs = extract_concepts(d, backend, 0.75);
  EXPECT_EQ(cs.doc_id, "doc-9");
  EXPECT_EQ(backend.calls, 1);
  EXPECT_NE(backend.last_prompt.find(d.text), std::string::npos);
  EXPECT_NE(backend.last_prompt.find("Educational Level"), std::string::npos);
}

TEST(ExtractConcepts, RetriesUpToThreeTimes) {
  FlakyBackend backend(2);
  Document d;
  d.id = "x";
  d.text = "text";
  ConceptSet cs = extract_concepts(d, backend, 0.75);
  EXPECT_EQ(backend.calls, 3);
  EXPECT_EQ(cs.topics.size(), 5u);
}

TEST(ExtractConcepts, SkipsAfterRetryBudget) {
  FlakyBackend backend(100);
  Document d;
  d.id = "x";
  d.text = "text";
  try {
    extract_concepts(d, backend, 0.75);
    FAIL() << "expected ExtractionError";
  } catch (const ExtractionError& e) {
    EXPECT_EQ(backend.calls, 4);  // first try + 3 retries
    EXPECT_NE(e.raw.find("garbled"), std::string::npos);
  }
}

TEST(ExtractConcepts, EmptyDocRejectedBeforeCall) {
  FlakyBackend backend(0);
  Document d;
  d.id = "x";
  EXPECT_THROW(extract_concepts(d, backend, 0.75), ArgumentError);
  EXPECT_EQ(backend.calls, 0);
}
