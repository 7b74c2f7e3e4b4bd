#pragma once

// Question generation (Levels 1-3), answer generation, deduplication and
// benchmark decontamination.
//
// Level 1: questions extracted/created from one document.
// Level 2: concept-recombination questions within one document.
// Level 3: questions from graph-sampled concepts grounded in 1-2 docs.
//
// Question ids hash (level, source ids or walk id, block index), so
// regenerating from the same inputs yields the same qids.

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include "synthweave/concepts.hpp"
#include "synthweave/corpus.hpp"
#include "synthweave/graph.hpp"
#include "synthweave/llmio.hpp"
#include "synthweave/text.hpp"

namespace synthweave {

struct QuestionRecord {
  std::string qid;
  std::string text;
  int gen_level = 1;
  std::string origin_tag;     // level 1: original_question | newly_created
  std::string school_level;   // level 1: canonical level token
  std::vector<std::string> selected_concepts;  // levels 2-3
  std::vector<std::string> source_doc_ids;     // 1 for levels 1-2, 1-2 for 3
  std::string walk_id;        // level 3

  void validate() const {
    if (qid.empty()) throw IntegrityError("question record: empty qid");
    if (text.empty()) throw IntegrityError("question record: empty text");
    if (gen_level < 1 || gen_level > 3)
      throw IntegrityError("question record: gen_level out of range");
    if (gen_level == 1) {
      if (origin_tag != "original_question" && origin_tag != "newly_created")
        throw IntegrityError("question record: level-1 needs an origin tag");
      if (source_doc_ids.size() != 1)
        throw IntegrityError("question record: level-1 needs 1 source doc");
    } else {
      if (selected_concepts.size() < 2 || selected_concepts.size() > 3)
        throw IntegrityError(
            "question record: levels 2-3 need 2-3 selected concepts");
      if (gen_level == 2 && source_doc_ids.size() != 1)
        throw IntegrityError("question record: level-2 needs 1 source doc");
      if (gen_level == 3 &&
          (source_doc_ids.empty() || source_doc_ids.size() > 2))
        throw IntegrityError(
            "question record: level-3 needs 1-2 source docs");
      if (gen_level == 3 && walk_id.empty())
        throw IntegrityError("question record: level-3 needs a walk_id");
    }
  }
};

struct QAPair {
  std::string qid;
  std::string question;
  std::string answer;
  std::string answer_model;
};

inline std::string make_qid(int level, std::string_view source_key,
                            std::size_t block_index) {
  std::uint64_t h = hash64(source_key, static_cast<std::uint64_t>(level));
  return to_hex(hash_combine(h, static_cast<std::uint64_t>(block_index)));
}

// ------------------------------------------------------- block parsing

namespace detail {

struct RawBlock {
  std::size_t index = 0;  // 0-based position in the response
  std::string body;
};

// Extracts <Qn>...</Qn> bodies in order of appearance.
inline std::vector<RawBlock> split_question_blocks(std::string_view raw) {
  std::vector<RawBlock> blocks;
  std::size_t pos = 0;
  std::size_t index = 0;
  while (true) {
    std::size_t open = raw.find("<Q", pos);
    if (open == std::string_view::npos) break;
    std::size_t i = open + 2;
    std::size_t digits = 0;
    while (i < raw.size() && std::isdigit(static_cast<unsigned char>(raw[i]))) {
      ++i;
      ++digits;
    }
    if (digits == 0 || i >= raw.size() || raw[i] != '>') {
      pos = open + 2;
      continue;
    }
    std::string number(raw.substr(open + 2, digits));
    std::string close_tag = "</Q" + number + ">";
    std::size_t close = raw.find(close_tag, i + 1);
    if (close == std::string_view::npos) {
      pos = i + 1;
      continue;
    }
    blocks.push_back({index++, std::string(raw.substr(i + 1, close - i - 1))});
    pos = close + close_tag.size();
  }
  return blocks;
}

// Collects the value of "Label:" within a block; the value may continue
// over following lines until the next known label.
inline std::string block_field(const std::string& body, const char* label,
                               std::initializer_list<const char*> stops) {
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos <= body.size()) {
    std::size_t nl = body.find('\n', pos);
    if (nl == std::string::npos) nl = body.size();
    lines.push_back(body.substr(pos, nl - pos));
    if (nl == body.size()) break;
    pos = nl + 1;
  }
  auto starts_with_label = [](const std::string& line, const char* lab) {
    std::size_t i = line.find_first_not_of(" \t");
    if (i == std::string::npos) return false;
    return line.compare(i, std::string(lab).size(), lab) == 0;
  };

  std::string value;
  bool in_field = false;
  for (const std::string& line : lines) {
    if (!in_field) {
      if (starts_with_label(line, label)) {
        std::size_t i = line.find(label);
        value = line.substr(i + std::string(label).size());
        in_field = true;
      }
      continue;
    }
    bool stop = false;
    for (const char* s : stops)
      if (starts_with_label(line, s)) stop = true;
    if (stop) break;
    value += "\n" + line;
  }
  // trim
  std::size_t b = value.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return std::string();
  std::size_t e = value.find_last_not_of(" \t\r\n");
  return value.substr(b, e - b + 1);
}

// "<tag>" -> "tag" (tolerates missing angle brackets).
inline std::string strip_angle(std::string s) {
  if (!s.empty() && s.front() == '<') s.erase(0, 1);
  if (!s.empty() && s.back() == '>') s.pop_back();
  return s;
}

// Splits a "Selected Concepts" value: strips [ ], splits on ';' when
// present (concept names may contain commas), otherwise on ','.
inline std::vector<std::string> split_concepts(std::string s) {
  std::size_t b = s.find_first_not_of(" \t");
  if (b != std::string::npos && s[b] == '[') s.erase(0, b + 1);
  std::size_t e = s.find_last_not_of(" \t");
  if (e != std::string::npos && s[e] == ']') s.erase(e);
  char sep = s.find(';') != std::string::npos ? ';' : ',';
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    std::size_t next = s.find(sep, pos);
    if (next == std::string::npos) next = s.size();
    std::string item = s.substr(pos, next - pos);
    std::size_t ib = item.find_first_not_of(" \t");
    if (ib != std::string::npos) {
      std::size_t ie = item.find_last_not_of(" \t");
      out.push_back(item.substr(ib, ie - ib + 1));
    }
    if (next == s.size()) break;
    pos = next + 1;
  }
  return out;
}

inline bool is_refusal(std::string_view raw) {
  std::size_t b = raw.find_first_not_of(" \t\r\n\"");
  if (b == std::string_view::npos) return false;
  return raw.substr(b).rfind("NOT SUITABLE", 0) == 0;
}

}  // namespace detail

// --------------------------------------------------------- generation

struct GenWarnings {
  std::size_t dropped_blocks = 0;   // unparsable or constraint-violating
  std::size_t truncated_blocks = 0; // beyond the per-source quota
};

inline std::vector<QuestionRecord> gen_level1(const Document& d,
                                              ChatBackend& backend,
                                              std::size_t quota = 5,
                                              GenWarnings* warnings = nullptr,
                                              double temperature = 0.75) {
  if (d.text.empty())
    throw ArgumentError("gen_level1: document '" + d.id + "' has empty text");
  ChatRequest req;
  req.user = prompts::render(prompts::kLevel1, {{"text", d.text}});
  req.temperature = temperature;
  std::string raw = backend.complete(req);
  if (detail::is_refusal(raw)) return {};

  std::vector<detail::RawBlock> blocks = detail::split_question_blocks(raw);
  std::vector<QuestionRecord> out;
  for (const detail::RawBlock& blk : blocks) {
    if (out.size() >= quota) {
      if (warnings) ++warnings->truncated_blocks;
      continue;
    }
    std::string question = detail::block_field(
        blk.body, "Question:", {"Orig_tag:", "Level:"});
    std::string tag = detail::strip_angle(
        detail::block_field(blk.body, "Orig_tag:", {"Question:", "Level:"}));
    std::string level = detail::strip_angle(
        detail::block_field(blk.body, "Level:", {"Question:", "Orig_tag:"}));
    if (question.empty() ||
        (tag != "original_question" && tag != "newly_created")) {
      if (warnings) ++warnings->dropped_blocks;
      continue;
    }
    QuestionRecord rec;
    rec.qid = make_qid(1, d.id, blk.index);
    rec.text = question;
    rec.gen_level = 1;
    rec.origin_tag = tag;
    rec.school_level = level_to_string(level_from_string(level));
    rec.source_doc_ids = {d.id};
    rec.validate();
    out.push_back(std::move(rec));
  }
  if (out.empty())
    throw ParseError("gen_level1: no parsable question blocks for doc '" +
                     d.id + "'");
  return out;
}

namespace detail {

// Shared Level-2/3 block parsing: concepts must be a 2-3-element subset
// of the offered list (canonical match); offending blocks are dropped.
inline std::vector<QuestionRecord> parse_concept_blocks(
    std::string_view raw, const std::vector<std::string>& offered,
    int gen_level, const std::string& qid_key,
    const std::vector<std::string>& source_doc_ids, const std::string& walk_id,
    std::size_t quota, GenWarnings* warnings) {
  std::set<std::string> offered_keys;
  for (const std::string& c : offered) offered_keys.insert(canonical_key(c));

  std::vector<QuestionRecord> out;
  for (const RawBlock& blk : split_question_blocks(raw)) {
    if (out.size() >= quota) {
      if (warnings) ++warnings->truncated_blocks;
      continue;
    }
    std::string question =
        block_field(blk.body, "Question:", {"Selected Concepts:"});
    std::vector<std::string> concepts = split_concepts(
        block_field(blk.body, "Selected Concepts:", {"Question:"}));
    bool all_offered = !concepts.empty();
    for (const std::string& c : concepts)
      if (!offered_keys.count(canonical_key(c))) all_offered = false;
    if (question.empty() || concepts.size() < 2 || concepts.size() > 3 ||
        !all_offered) {
      if (warnings) ++warnings->dropped_blocks;
      continue;
    }
    QuestionRecord rec;
    rec.qid = make_qid(gen_level, qid_key, blk.index);
    rec.text = question;
    rec.gen_level = gen_level;
    rec.selected_concepts = concepts;
    rec.source_doc_ids = source_doc_ids;
    rec.walk_id = walk_id;
    rec.validate();
    out.push_back(std::move(rec));
  }
  if (out.empty())
    throw ParseError("no parsable question blocks (source " + qid_key + ")");
  return out;
}

}  // namespace detail

inline std::vector<QuestionRecord> gen_level2(const Document& d,
                                              const ConceptSet& k,
                                              ChatBackend& backend,
                                              std::size_t quota = 5,
                                              GenWarnings* warnings = nullptr,
                                              double temperature = 0.75) {
  if (k.doc_id != d.id)
    throw ArgumentError("gen_level2: concept set doc_id '" + k.doc_id +
                        "' does not match document '" + d.id + "'");
  if (k.empty())
    throw ArgumentError("gen_level2: concept set for '" + d.id +
                        "' has no topics");

  std::vector<std::string> offered = k.topics;
  std::vector<std::string> kcs = k.all_key_concepts();
  offered.insert(offered.end(), kcs.begin(), kcs.end());

  ChatRequest req;
  req.user = prompts::render(
      prompts::kLevel2,
      {{"text", d.text}, {"concept", render_concept_list(k.topics, kcs)}});
  req.temperature = temperature;
  std::string raw = backend.complete(req);
  return detail::parse_concept_blocks(raw, offered, 2, d.id, {d.id},
                                      std::string(), quota, warnings);
}

inline std::vector<QuestionRecord> gen_level3(
    const SampledConceptSet& kg, const std::vector<Document>& grounding,
    ChatBackend& backend, std::size_t quota = 3,
    GenWarnings* warnings = nullptr, double temperature = 0.75) {
  if (grounding.empty() || grounding.size() > 2)
    throw ArgumentError("gen_level3: need 1-2 grounding documents");

  std::string text;
  for (std::size_t i = 0; i < grounding.size(); ++i) {
    if (i) text += "\n\n";
    text += "Reference Material " + std::to_string(i + 1) + ":\n" +
            grounding[i].text;
  }
  std::vector<std::string> offered = kg.topics;
  offered.insert(offered.end(), kg.key_concepts.begin(),
                 kg.key_concepts.end());

  ChatRequest req;
  req.user = prompts::render(
      prompts::kLevel3,
      {{"text", text},
       {"concept", render_concept_list(kg.topics, kg.key_concepts)}});
  req.temperature = temperature;
  std::string raw = backend.complete(req);

  std::vector<std::string> ids;
  for (const Document& d : grounding) ids.push_back(d.id);
  return detail::parse_concept_blocks(raw, offered, 3, kg.walk_id, ids,
                                      kg.walk_id, quota, warnings);
}

// ------------------------------------------------------------ answers

struct GenAnswersResult {
  std::vector<QAPair> pairs;
  struct Failure {
    std::string qid;
    std::string error;
  };
  std::vector<Failure> failures;
};

inline GenAnswersResult gen_answers(const std::vector<QuestionRecord>& questions,
                                    ChatBackend& backend,
                                    const std::string& answer_model,
                                    std::size_t max_concurrency = 4) {
  if (questions.empty())
    throw ArgumentError("gen_answers: empty question list");
  std::unordered_set<std::string> qids;
  for (const QuestionRecord& q : questions)
    if (!qids.insert(q.qid).second)
      throw ArgumentError("gen_answers: duplicate qid '" + q.qid + "'");

  std::vector<ChatRequest> reqs;
  reqs.reserve(questions.size());
  for (const QuestionRecord& q : questions) {
    ChatRequest req;
    req.user = prompts::render(prompts::kAnswer, {{"text", q.text}});
    req.temperature = 0.0;  // deterministic answerer
    reqs.push_back(std::move(req));
  }

  GenAnswersResult out;
  for (const CompletionResult& r :
       complete_batch(backend, reqs, max_concurrency)) {
    const QuestionRecord& q = questions[r.index];
    if (r.ok && !r.text.empty()) {
      out.pairs.push_back({q.qid, q.text, r.text, answer_model});
    } else {
      out.failures.push_back(
          {q.qid, r.ok ? std::string("empty answer") : r.error});
    }
  }
  return out;
}

// -------------------------------------------------------------- dedup

struct DedupParams {
  std::size_t shingle_n = 3;
  double jaccard_threshold = 0.8;
};

// Exact dedup on normalized text (first occurrence wins), then near-dup
// removal: for every pair with shingle Jaccard >= threshold, the record
// whose qid sorts later is dropped.  Survivors keep input order.
inline std::vector<QuestionRecord> dedup(
    const std::vector<QuestionRecord>& questions,
    const DedupParams& params = {}) {
  std::vector<std::size_t> kept;
  std::unordered_set<std::string> seen_exact;
  for (std::size_t i = 0; i < questions.size(); ++i) {
    std::string norm = normalize_text(questions[i].text);
    if (seen_exact.insert(norm).second) kept.push_back(i);
  }

  std::vector<std::set<std::string>> shingles(kept.size());
  for (std::size_t a = 0; a < kept.size(); ++a)
    shingles[a] =
        shingle_set(normalize_text(questions[kept[a]].text), params.shingle_n);

  std::vector<bool> dropped(kept.size(), false);
  for (std::size_t a = 0; a < kept.size(); ++a) {
    for (std::size_t b = a + 1; b < kept.size(); ++b) {
      if (jaccard(shingles[a], shingles[b]) < params.jaccard_threshold)
        continue;
      const std::string& qa = questions[kept[a]].qid;
      const std::string& qb = questions[kept[b]].qid;
      if (qa < qb)
        dropped[b] = true;
      else
        dropped[a] = true;
    }
  }

  std::vector<QuestionRecord> out;
  for (std::size_t a = 0; a < kept.size(); ++a)
    if (!dropped[a]) out.push_back(questions[kept[a]]);
  return out;
}

// ---------------------------------------------------- decontamination

// Drops any question sharing at least one word n-gram with any benchmark
// question (both sides normalized).
inline std::vector<QuestionRecord> decontaminate(
    const std::vector<QuestionRecord>& questions,
    const std::vector<std::string>& benchmark_questions, std::size_t n = 8) {
  if (n < 3) throw ArgumentError("decontaminate: n must be >= 3");

  std::unordered_set<std::string> banned;
  for (const std::string& q : benchmark_questions)
    for (std::string& gram : word_ngrams(words(normalize_text(q)), n))
      banned.insert(std::move(gram));

  std::vector<QuestionRecord> out;
  for (const QuestionRecord& q : questions) {
    bool contaminated = false;
    for (const std::string& gram :
         word_ngrams(words(normalize_text(q.text)), n)) {
      if (banned.count(gram)) {
        contaminated = true;
        break;
      }
    }
    if (!contaminated) out.push_back(q);
  }
  return out;
}

// -------------------------------------------------------- serialization

inline json question_to_json(const QuestionRecord& q) {
  json rec{{"qid", q.qid},
           {"text", q.text},
           {"gen_level", q.gen_level},
           {"source_doc_ids", q.source_doc_ids}};
  if (!q.origin_tag.empty()) rec["origin_tag"] = q.origin_tag;
  if (!q.school_level.empty()) rec["school_level"] = q.school_level;
  if (!q.selected_concepts.empty())
    rec["selected_concepts"] = q.selected_concepts;
  if (!q.walk_id.empty()) rec["walk_id"] = q.walk_id;
  return rec;
}

inline QuestionRecord question_from_json(const json& j) {
  QuestionRecord q;
  q.qid = j.at("qid").get<std::string>();
  q.text = j.at("text").get<std::string>();
  q.gen_level = j.at("gen_level").get<int>();
  for (const json& id : j.at("source_doc_ids"))
    q.source_doc_ids.push_back(id.get<std::string>());
  q.origin_tag = j.value("origin_tag", std::string());
  q.school_level = j.value("school_level", std::string());
  if (j.contains("selected_concepts"))
    for (const json& c : j["selected_concepts"])
      q.selected_concepts.push_back(c.get<std::string>());
  q.walk_id = j.value("walk_id", std::string());
  q.validate();
  return q;
}

inline json qa_to_json(const QAPair& p) {
  return json{{"qid", p.qid},
              {"question", p.question},
              {"answer", p.answer},
              {"answer_model", p.answer_model}};
}

inline QAPair qa_from_json(const json& j) {
  QAPair p;
  p.qid = j.at("qid").get<std::string>();
  p.question = j.at("question").get<std::string>();
  p.answer = j.at("answer").get<std::string>();
  p.answer_model = j.value("answer_model", std::string());
  if (p.answer.empty()) throw IntegrityError("qa pair: empty answer");
  return p;
}

}  // namespace synthweave
