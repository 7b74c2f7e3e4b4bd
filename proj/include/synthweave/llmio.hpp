#pragma once

// Chat-completion plumbing shared by every prompt-driven stage.
//
// ChatBackend is the narrow interface; MockChatBackend recognizes the
// prompt family via sentinel substrings of the shipped templates and
// produces format-valid, seed-varied output so the whole pipeline runs
// offline.  Mock output is a pure function of (request fields, seed) —
// no clock, no global state, no platform dependence.
//
// The HTTP client lives in remote.hpp to keep this header light.

#include <atomic>
#include <cstdint>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "synthweave/common.hpp"
#include "synthweave/prompts.hpp"
#include "synthweave/text.hpp"

namespace synthweave {

struct ChatRequest {
  std::string system;            // optional
  std::string user;
  double temperature = 0.75;
  int max_tokens = 4096;
  std::string model;             // empty => backend's configured model
};

inline void validate_request(const ChatRequest& req) {
  if (req.user.empty()) throw ArgumentError("chat request: empty user message");
  if (req.temperature < 0.0 || req.temperature > 2.0)
    throw ArgumentError("chat request: temperature out of [0,2]");
  if (req.max_tokens < 1)
    throw ArgumentError("chat request: max_tokens must be >= 1");
}

enum class BackendKind { mock, remote };

struct BackendConfig {
  BackendKind kind = BackendKind::mock;
  std::string endpoint;           // remote: base URL, e.g. http://host:port/v1
  std::string model;
  std::string api_key_env = "SYNTHWEAVE_LLM_API_KEY";
  int max_concurrency = 4;
  int max_retries = 3;
  int base_backoff_ms = 100;
  std::uint64_t seed = 0;         // mock only

  void validate() const {
    if (max_concurrency < 1)
      throw ArgumentError("backend config: max_concurrency must be >= 1");
    if (max_retries < 0)
      throw ArgumentError("backend config: max_retries must be >= 0");
    if (kind == BackendKind::remote) {
      if (endpoint.empty())
        throw ArgumentError("backend config: remote backend needs an endpoint");
      if (api_key_env.empty())
        throw ArgumentError("backend config: remote backend needs api_key_env");
    }
  }
};

// Full-jitter exponential backoff: the wait before retry `attempt`
// (1-based: attempt 1 follows the first failure) is uniform in
// [0, base_ms * 2^attempt].
inline std::uint64_t backoff_delay_ms(std::uint64_t base_ms, int attempt,
                                      Rng& rng) {
  int shift = attempt < 20 ? attempt : 20;  // cap the window at base * 2^20
  std::uint64_t cap = base_ms << shift;
  return rng.uniform_int(cap + 1);
}

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual std::string complete(const ChatRequest& req) = 0;
};

// ------------------------------------------------------------- mock

class MockChatBackend : public ChatBackend {
 public:
  explicit MockChatBackend(std::uint64_t seed = 0) : seed_(seed) {}

  std::string complete(const ChatRequest& req) override {
    validate_request(req);
    std::string prompt = req.system.empty() ? req.user
                                            : req.system + "\n\n" + req.user;
    std::uint64_t h = hash64(prompt, seed_);
    h = hash_combine(h, hash64(req.model));
    h = hash_combine(h, static_cast<std::uint64_t>(req.temperature * 1e6));
    h = hash_combine(h, static_cast<std::uint64_t>(req.max_tokens));
    Rng rng(h);

    if (prompt.find(prompts::kConceptSentinel) != std::string::npos)
      return concept_response(prompt, rng);
    if (prompt.find(prompts::kLevel1Sentinel) != std::string::npos)
      return level1_response(prompt, rng);
    if (prompt.find(prompts::kLevel2Sentinel) != std::string::npos)
      return question_blocks_response(prompt, rng, 5);
    if (prompt.find(prompts::kLevel3Sentinel) != std::string::npos)
      return question_blocks_response(prompt, rng, 3);
    if (prompt.find(prompts::kRatingSentinel) != std::string::npos)
      return rating_response(prompt);
    if (prompt.find(prompts::kAnswerSentinel) != std::string::npos)
      return answer_response(rng);
    throw BackendError("mock backend: prompt matches no known family");
  }

  // Number of distinct math-flavored keywords in a text; the mock's
  // stand-in for topical relevance (drives refusals and ratings).
  static int math_signal(std::string_view text) {
    static const char* kKeywords[] = {
        "math",       "equation",   "solve",     "theorem",  "integral",
        "derivative", "algebra",    "geometry",  "triangle", "matrix",
        "probability","polynomial", "fraction",  "calculus", "angle",
        "vector",     "prime",      "sum",       "product",  "formula"};
    std::string norm = normalize_text(text);
    int n = 0;
    for (const char* kw : kKeywords)
      if (norm.find(kw) != std::string::npos) ++n;
    return n;
  }

 private:
  std::uint64_t seed_;

  static std::string between(std::string_view s, std::string_view open,
                             std::string_view close) {
    std::size_t b = s.find(open);
    if (b == std::string_view::npos) return std::string();
    b += open.size();
    std::size_t e = close.empty() ? s.size() : s.find(close, b);
    if (e == std::string_view::npos) e = s.size();
    return std::string(s.substr(b, e - b));
  }

  // A couple of content words from the article make generated questions
  // document-specific.
  static std::vector<std::string> salient_words(std::string_view text,
                                                std::size_t limit) {
    std::vector<std::string> out;
    for (const std::string& w : words(normalize_text(text))) {
      if (w.size() < 5) continue;
      bool alpha = true;
      for (char c : w)
        if (c < 'a' || c > 'z') alpha = false;
      if (!alpha) continue;
      out.push_back(w);
      if (out.size() >= limit) break;
    }
    return out;
  }

  std::string level1_response(const std::string& prompt, Rng& rng) const {
    std::string article =
        between(prompt, "#### Article\n", "\n\n#### Output Format");
    if (math_signal(article) == 0)
      return "NOT SUITABLE for creating questions.";

    static const char* kLevels[] = {"elementary", "middle_school",
                                    "high_school", "college", "grad_school",
                                    "competition"};
    std::vector<std::string> vocab = salient_words(article, 40);
    std::string out;
    for (int q = 1; q <= 5; ++q) {
      std::string w1 = vocab.empty()
                           ? "numbers"
                           : vocab[rng.uniform_int(vocab.size())];
      std::string w2 = vocab.empty()
                           ? "sums"
                           : vocab[rng.uniform_int(vocab.size())];
      std::uint64_t a = 2 + rng.uniform_int(11);
      std::uint64_t b = 1 + rng.uniform_int(29);
      std::uint64_t x = 2 + rng.uniform_int(97);
      std::string ref = to_hex(rng.next_u64()).substr(0, 8);
      const char* tag =
          rng.uniform_int(2) == 0 ? "original_question" : "newly_created";
      std::string lvl = kLevels[rng.uniform_int(6)];
      out += "<Q" + std::to_string(q) + ">\n";
      out += "Question: In exercise " + ref + ", which revisits " + w1 +
             " and " + w2 + ", compute the value of \\(" + std::to_string(a) +
             "x + " + std::to_string(b) + "\\) when \\(x = " +
             std::to_string(x) + "\\). State the result for case " + ref +
             ".\n";
      out += "Orig_tag:<" + std::string(tag) + ">\n";
      out += "Level:<" + lvl + ">\n";
      out += "</Q" + std::to_string(q) + ">\n";
    }
    return out;
  }

  std::string question_blocks_response(const std::string& prompt, Rng& rng,
                                       int n_blocks) const {
    std::string concept_region =
        between(prompt, "- **Concept List**:\n", "\n\n#### Output Format:");
    std::vector<std::string> offered;
    std::size_t pos = 0;
    while (pos < concept_region.size()) {
      std::size_t nl = concept_region.find('\n', pos);
      if (nl == std::string::npos) nl = concept_region.size();
      std::string line = concept_region.substr(pos, nl - pos);
      pos = nl + 1;
      std::size_t dash = line.find("- ");
      if (dash == std::string::npos) continue;
      std::string name = line.substr(dash + 2);
      while (!name.empty() && (name.back() == ' ' || name.back() == '\r'))
        name.pop_back();
      if (!name.empty()) offered.push_back(name);
    }
    if (offered.empty())
      throw BackendError("mock backend: concept list empty in prompt");

    std::string out;
    for (int q = 1; q <= n_blocks; ++q) {
      std::size_t want = 2 + rng.uniform_int(2);  // 2 or 3
      if (want > offered.size()) want = offered.size();
      // distinct picks via partial shuffle of an index list
      std::vector<std::size_t> ids(offered.size());
      for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
      for (std::size_t i = 0; i < want; ++i) {
        std::size_t j = i + rng.uniform_int(ids.size() - i);
        std::swap(ids[i], ids[j]);
      }
      std::string joined;
      for (std::size_t i = 0; i < want; ++i) {
        if (i) joined += "; ";
        joined += offered[ids[i]];
      }
      std::uint64_t n = 3 + rng.uniform_int(96);
      std::string ref = to_hex(rng.next_u64()).substr(0, 8);
      out += "<Q" + std::to_string(q) + ">\n";
      out += "Selected Concepts: [" + joined + "]\n";
      out += "Question: Exercise " + ref + ": construct a worked example " +
             "combining " + joined + ", and evaluate the resulting " +
             "expression for \\(n = " + std::to_string(n) +
             "\\). Report the value for case " + ref + ".\n";
      out += "</Q" + std::to_string(q) + ">\n";
    }
    return out;
  }

  std::string rating_response(const std::string& prompt) const {
    std::string doc = between(prompt, "## Document\n", "\n\n## Output Format");
    int signal = math_signal(doc);
    int score = signal >= 3 ? 9 : (signal >= 1 ? 5 : 2);
    return "<score>" + std::to_string(score) + "</score>";
  }

  std::string answer_response(Rng& rng) const {
    std::uint64_t v = 1 + rng.uniform_int(999);
    std::uint64_t w = 1 + rng.uniform_int(99);
    return "Step 1: Translate the problem statement into an equation and "
           "isolate the unknown.\nStep 2: Substitute the given values and "
           "simplify; the intermediate quantity equals " +
           std::to_string(w) +
           ".\nStep 3: Apply the final operation.\nFinal answer: \\(" +
           std::to_string(v) + "\\)";
  }

  std::string concept_response(const std::string& prompt, Rng& rng) const {
    std::string doc = between(prompt, "## Text\n", "\n\n## Output Format");

    // Documents carrying a pre-tagged block are echoed verbatim; this is
    // how structured fixtures drive the extraction parser end to end.
    std::size_t lb = doc.find("<level>");
    std::size_t ke = doc.find("</key_concept>");
    if (lb != std::string::npos && ke != std::string::npos && ke > lb)
      return doc.substr(lb, ke + 14 - lb);

    static const char* kTopics[] = {
        "Linear Equations",      "Quadratic Functions",
        "Triangle Geometry",     "Circle Theorems",
        "Probability Models",    "Sequences and Series",
        "Ratio and Proportion",  "Exponential Growth",
        "Polynomial Arithmetic", "Coordinate Geometry",
        "Number Theory Basics",  "Trigonometric Ratios"};
    static const char* kConceptPool[] = {
        "Solving for One Variable", "Slope of a Line",
        "Factoring Quadratics",     "Discriminant Analysis",
        "Pythagorean Theorem",      "Similar Triangles",
        "Inscribed Angles",         "Arc Length",
        "Expected Value",           "Independent Events",
        "Arithmetic Progressions",  "Geometric Progressions",
        "Unit Rates",               "Percent Change",
        "Compound Interest",        "Exponential Decay",
        "Polynomial Long Division", "Remainder Theorem",
        "Distance Formula",         "Midpoint Formula",
        "Greatest Common Divisor",  "Modular Arithmetic",
        "Sine Rule",                "Cosine Rule",
        "Linear Inequalities",      "Systems of Equations",
        "Completing the Square",    "Vertex Form",
        "Area of Polygons",         "Tangent Lines",
        "Conditional Probability",  "Permutations",
        "Combinations",             "Telescoping Sums",
        "Prime Factorization",      "Angle Sum Identities"};
    static const char* kSubjects[] = {"Algebra", "Geometry", "Probability",
                                      "Calculus", "Number Theory"};
    static const char* kLevelNames[] = {"Primary School", "Middle School",
                                        "High School",    "College",
                                        "Graduate School", "Competition"};

    std::size_t n_topics = 2 + rng.uniform_int(2);  // 2 or 3
    std::vector<std::size_t> tids(12);
    for (std::size_t i = 0; i < 12; ++i) tids[i] = i;
    for (std::size_t i = 0; i < n_topics; ++i) {
      std::size_t j = i + rng.uniform_int(12 - i);
      std::swap(tids[i], tids[j]);
    }

    std::string out = "<level>" +
                      std::string(kLevelNames[rng.uniform_int(6)]) +
                      "</level>\n<subject>" +
                      std::string(kSubjects[rng.uniform_int(5)]) +
                      "</subject>\n\n<topic>\nTopics:\n";
    for (std::size_t i = 0; i < n_topics; ++i)
      out += std::to_string(i + 1) + ". " + kTopics[tids[i]] + "\n";
    out += "</topic>\n\n<key_concept>\nKey Concepts:\n";
    for (std::size_t i = 0; i < n_topics; ++i) {
      out += std::to_string(i + 1) + ". " + kTopics[tids[i]] + ":\n";
      std::size_t n_kc = 5 + rng.uniform_int(3);  // 5..7
      std::vector<std::size_t> kids(36);
      for (std::size_t k = 0; k < 36; ++k) kids[k] = k;
      for (std::size_t k = 0; k < n_kc; ++k) {
        std::size_t j = k + rng.uniform_int(36 - k);
        std::swap(kids[k], kids[j]);
      }
      for (std::size_t k = 0; k < n_kc; ++k)
        out += "    " + std::to_string(i + 1) + "." + std::to_string(k + 1) +
               ". " + kConceptPool[kids[k]] + "\n";
      out += "\n";
    }
    out += "</key_concept>\n";
    return out;
  }
};

// ------------------------------------------------------------ batching

struct CompletionResult {
  std::size_t index = 0;
  bool ok = false;
  std::string text;    // valid when ok
  std::string error;   // valid when !ok
};

// Runs all requests with at most max_concurrency in flight.  Item errors
// are captured per result; the batch itself always returns, index-aligned
// with the input.
inline std::vector<CompletionResult> complete_batch(
    ChatBackend& backend, const std::vector<ChatRequest>& reqs,
    std::size_t max_concurrency) {
  if (reqs.empty()) throw ArgumentError("complete_batch: empty request list");
  if (max_concurrency == 0)
    throw ArgumentError("complete_batch: max_concurrency must be >= 1");

  std::vector<CompletionResult> results(reqs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= reqs.size()) return;
      CompletionResult& r = results[i];
      r.index = i;
      try {
        r.text = backend.complete(reqs[i]);
        r.ok = true;
      } catch (const std::exception& e) {
        r.ok = false;
        r.error = e.what();
      }
    }
  };

  std::size_t n_threads = std::min(max_concurrency, reqs.size());
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return results;
}

}  // namespace synthweave
