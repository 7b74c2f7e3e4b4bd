#pragma once

// Per-document topic / key-concept structures.
//
// extract_concepts renders the extraction prompt for one document, calls
// the chat backend, and parses the tagged response (<level>, <subject>,
// <topic>, <key_concept> blocks with "N." topic lines and "N.M." concept
// lines) into a ConceptSet.  Concept identity everywhere downstream is
// the canonical key: normalize_text of the display string.

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "synthweave/corpus.hpp"
#include "synthweave/jsonl.hpp"
#include "synthweave/llmio.hpp"
#include "synthweave/prompts.hpp"
#include "synthweave/text.hpp"

namespace synthweave {

enum class EduLevel {
  primary_school,
  middle_school,
  high_school,
  college,
  grad_school,
  competition,
  other,
};

inline std::string level_to_string(EduLevel l) {
  switch (l) {
    case EduLevel::primary_school: return "primary_school";
    case EduLevel::middle_school: return "middle_school";
    case EduLevel::high_school: return "high_school";
    case EduLevel::college: return "college";
    case EduLevel::grad_school: return "grad_school";
    case EduLevel::competition: return "competition";
    case EduLevel::other: return "other";
  }
  return "other";
}

// Human-form label as it appears in extraction output.
inline std::string level_display(EduLevel l) {
  switch (l) {
    case EduLevel::primary_school: return "Primary School";
    case EduLevel::middle_school: return "Middle School";
    case EduLevel::high_school: return "High School";
    case EduLevel::college: return "College";
    case EduLevel::grad_school: return "Graduate School";
    case EduLevel::competition: return "Competition";
    case EduLevel::other: return "Other";
  }
  return "Other";
}

// Case/whitespace/underscore tolerant; unknown labels map to `other`.
inline EduLevel level_from_string(std::string_view s) {
  std::string key = normalize_text(s);
  for (char& c : key)
    if (c == '_') c = ' ';
  if (key == "primary school" || key == "elementary" ||
      key == "elementary school")
    return EduLevel::primary_school;
  if (key == "middle school") return EduLevel::middle_school;
  if (key == "high school") return EduLevel::high_school;
  if (key == "college") return EduLevel::college;
  if (key == "graduate school" || key == "grad school")
    return EduLevel::grad_school;
  if (key == "competition") return EduLevel::competition;
  return EduLevel::other;
}

struct ConceptSet {
  std::string doc_id;
  EduLevel level = EduLevel::other;
  std::string subject;
  std::vector<std::string> topics;  // display strings, extraction order
  std::map<std::string, std::vector<std::string>> key_concepts;  // topic -> KCs

  bool empty() const { return topics.empty(); }

  // All key concepts in topic order (display strings).
  std::vector<std::string> all_key_concepts() const {
    std::vector<std::string> out;
    for (const std::string& t : topics) {
      auto it = key_concepts.find(t);
      if (it == key_concepts.end()) continue;
      out.insert(out.end(), it->second.begin(), it->second.end());
    }
    return out;
  }
};

// Canonical node/identity key for a concept string.
inline std::string canonical_key(std::string_view display) {
  return normalize_text(display);
}

// Extraction failure after retries; keeps the unparsable response.
class ExtractionError : public Error {
 public:
  ExtractionError(const std::string& msg, std::string raw_response)
      : Error(msg), raw(std::move(raw_response)) {}
  std::string raw;
};

namespace detail {

// trim + collapse internal whitespace, preserving case (display form).
inline std::string display_form(std::string_view s) {
  std::string out;
  bool pending = false;
  for (char c : s) {
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      pending = !out.empty();
      continue;
    }
    if (pending) {
      out += ' ';
      pending = false;
    }
    out += c;
  }
  return out;
}

inline std::string tag_content(std::string_view raw, std::string_view tag) {
  std::string open = "<" + std::string(tag) + ">";
  std::string close = "</" + std::string(tag) + ">";
  std::size_t b = raw.find(open);
  if (b == std::string_view::npos) return std::string();
  b += open.size();
  std::size_t e = raw.find(close, b);
  if (e == std::string_view::npos) return std::string();
  return std::string(raw.substr(b, e - b));
}

inline std::vector<std::string> split_lines(std::string_view s) {
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    std::size_t nl = s.find('\n', pos);
    if (nl == std::string_view::npos) nl = s.size();
    std::string line(s.substr(pos, nl - pos));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
    if (nl == s.size()) break;
    pos = nl + 1;
  }
  return lines;
}

// Matches "N. rest" (topic or KC-group line).  Returns false if the line
// is not of that shape; kc-group lines end with ':'.
inline bool match_numbered(const std::string& line, int& number,
                           std::string& rest) {
  std::size_t i = line.find_first_not_of(" \t");
  if (i == std::string::npos || !std::isdigit(static_cast<unsigned char>(line[i])))
    return false;
  std::size_t start = i;
  while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i])))
    ++i;
  if (i >= line.size() || line[i] != '.') return false;
  std::size_t after_dot = i + 1;
  // "N.M." shapes are key-concept lines, not topic/group lines.
  if (after_dot < line.size() &&
      std::isdigit(static_cast<unsigned char>(line[after_dot])))
    return false;
  number = std::stoi(line.substr(start, i - start));
  rest = line.substr(after_dot);
  return true;
}

// Matches "N.M. concept".
inline bool match_kc_line(const std::string& line, int& group,
                          std::string& concept_text) {
  std::size_t i = line.find_first_not_of(" \t");
  if (i == std::string::npos || !std::isdigit(static_cast<unsigned char>(line[i])))
    return false;
  std::size_t start = i;
  while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i])))
    ++i;
  if (i >= line.size() || line[i] != '.') return false;
  ++i;
  if (i >= line.size() || !std::isdigit(static_cast<unsigned char>(line[i])))
    return false;
  while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i])))
    ++i;
  if (i < line.size() && line[i] == '.') ++i;
  group = std::stoi(line.substr(start));
  concept_text = line.substr(i);
  return true;
}

}  // namespace detail

// Parses the tagged extraction output.  doc_id is left empty; callers
// stamp it.  Tolerant of junk/ellipsis lines but strict about structure:
// zero topics or a key-concept group without a matching topic is an error.
inline ConceptSet parse_concept_output(std::string_view raw) {
  ConceptSet cs;

  std::string level_text = detail::tag_content(raw, "level");
  cs.level = level_text.empty() ? EduLevel::other
                                : level_from_string(level_text);
  cs.subject = detail::display_form(detail::tag_content(raw, "subject"));

  std::string topic_block = detail::tag_content(raw, "topic");
  if (topic_block.empty())
    throw ParseError("concept output: missing <topic> block");

  std::map<int, std::string> topic_by_number;
  std::map<std::string, bool> seen_keys;
  for (const std::string& line : detail::split_lines(topic_block)) {
    int number = 0;
    std::string rest;
    if (!detail::match_numbered(line, number, rest)) continue;
    std::string display = detail::display_form(rest);
    if (display.empty()) continue;
    std::string key = canonical_key(display);
    if (seen_keys.count(key))
      throw ParseError("concept output: duplicate topic '" + display + "'");
    seen_keys[key] = true;
    topic_by_number[number] = display;
    cs.topics.push_back(display);
  }
  if (cs.topics.empty())
    throw ParseError("concept output: no topics parsed");

  std::string kc_block = detail::tag_content(raw, "key_concept");
  std::string current_topic;
  for (const std::string& line : detail::split_lines(kc_block)) {
    int number = 0;
    std::string rest;
    if (detail::match_kc_line(line, number, rest)) {
      std::string display = detail::display_form(rest);
      if (display.empty() || display == "...") continue;
      auto it = topic_by_number.find(number);
      if (it == topic_by_number.end())
        throw ParseError("concept output: key-concept group " +
                         std::to_string(number) + " has no matching topic");
      std::vector<std::string>& kcs = cs.key_concepts[it->second];
      std::string key = canonical_key(display);
      bool dup = false;
      for (const std::string& existing : kcs)
        if (canonical_key(existing) == key) dup = true;
      if (!dup) kcs.push_back(display);
    } else if (detail::match_numbered(line, number, rest)) {
      // group header "N. Topic:"
      auto it = topic_by_number.find(number);
      if (it == topic_by_number.end())
        throw ParseError("concept output: key-concept group " +
                         std::to_string(number) + " has no matching topic");
      current_topic = it->second;
      (void)current_topic;
    }
    // all other lines (headers, ellipses, blanks) are ignored
  }
  return cs;
}

// Renders a ConceptSet back into the tagged output format; parsing the
// result reproduces the ConceptSet exactly (canonical-form fixpoint).
inline std::string render_concept_block(const ConceptSet& cs) {
  std::string out;
  out += "<level>" + level_display(cs.level) + "</level>\n";
  out += "<subject>" + cs.subject + "</subject>\n\n";
  out += "<topic>\nTopics:\n";
  for (std::size_t i = 0; i < cs.topics.size(); ++i)
    out += std::to_string(i + 1) + ". " + cs.topics[i] + "\n";
  out += "</topic>\n\n<key_concept>\nKey Concepts:\n";
  for (std::size_t i = 0; i < cs.topics.size(); ++i) {
    auto it = cs.key_concepts.find(cs.topics[i]);
    if (it == cs.key_concepts.end() || it->second.empty()) continue;
    out += std::to_string(i + 1) + ". " + cs.topics[i] + ":\n";
    for (std::size_t k = 0; k < it->second.size(); ++k)
      out += "    " + std::to_string(i + 1) + "." + std::to_string(k + 1) +
             ". " + it->second[k] + "\n";
    out += "\n";
  }
  out += "</key_concept>\n";
  return out;
}

// The {{ concept }} payload for Level-2/3 prompts: bullet lists the mock
// backend (and any real model) can select concepts from.
inline std::string render_concept_list(const std::vector<std::string>& topics,
                                       const std::vector<std::string>& kcs) {
  std::string out = "Topics:\n";
  for (const std::string& t : topics) out += "- " + t + "\n";
  out += "Key Concepts:\n";
  for (const std::string& k : kcs) out += "- " + k + "\n";
  return out;
}

// ------------------------------------------------------- serialization

inline json concept_set_to_json(const ConceptSet& cs) {
  json kcs = json::object();
  for (const auto& [topic, list] : cs.key_concepts) kcs[topic] = list;
  return json{{"doc_id", cs.doc_id},
              {"level", level_to_string(cs.level)},
              {"subject", cs.subject},
              {"topics", cs.topics},
              {"key_concepts", std::move(kcs)}};
}

inline ConceptSet concept_set_from_json(const json& j) {
  ConceptSet cs;
  cs.doc_id = j.at("doc_id").get<std::string>();
  cs.level = level_from_string(j.at("level").get<std::string>());
  cs.subject = j.value("subject", std::string());
  for (const json& t : j.at("topics")) cs.topics.push_back(t.get<std::string>());
  if (cs.topics.empty()) throw ParseError("concept set: empty topics");
  if (j.contains("key_concepts")) {
    for (auto it = j["key_concepts"].begin(); it != j["key_concepts"].end();
         ++it) {
      bool known = false;
      for (const std::string& t : cs.topics)
        if (t == it.key()) known = true;
      if (!known)
        throw IntegrityError("concept set: key_concepts topic '" + it.key() +
                             "' not in topics");
      std::vector<std::string> list;
      for (const json& k : it.value()) list.push_back(k.get<std::string>());
      cs.key_concepts[it.key()] = std::move(list);
    }
  }
  return cs;
}

// --------------------------------------------------------- extraction

// Renders the extraction prompt for d, completes it, parses the response.
// Re-prompts up to max_retries times on parse failures.
inline ConceptSet extract_concepts(const Document& d, ChatBackend& backend,
                                   double temperature = 0.75,
                                   int max_retries = 3) {
  if (d.text.empty())
    throw ArgumentError("extract_concepts: document '" + d.id +
                        "' has empty text");
  ChatRequest req;
  req.user = prompts::render(prompts::kConceptExtraction, {{"text", d.text}});
  req.temperature = temperature;

  std::string raw;
  std::string last_error;
  for (int attempt = 0; attempt <= max_retries; ++attempt) {
    raw = backend.complete(req);
    try {
      ConceptSet cs = parse_concept_output(raw);
      cs.doc_id = d.id;
      return cs;
    } catch (const ParseError& e) {
      last_error = e.what();
    }
  }
  throw ExtractionError("extract_concepts: unparsable response for doc '" +
                            d.id + "' after " + std::to_string(max_retries) +
                            " retries: " + last_error,
                        raw);
}

}  // namespace synthweave
