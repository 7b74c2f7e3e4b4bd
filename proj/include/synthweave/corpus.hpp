#pragma once

// Document corpus ingestion.
//
// Documents live in JSONL files with at least {"id": ..., "text": ...}.
// Unknown fields are kept in Document::extra and written back verbatim,
// so running a filter stage never strips caller metadata.

#include <string>
#include <unordered_set>
#include <vector>

#include "synthweave/jsonl.hpp"

namespace synthweave {

struct Document {
  std::string id;
  std::string text;
  json extra = json::object();  // passthrough fields other than id/text
};

inline std::vector<Document> read_documents(const std::string& path) {
  std::vector<Document> docs;
  std::unordered_set<std::string> seen;
  for_each_jsonl(path, [&](std::size_t lineno, const json& rec) {
    std::string where = path + ":" + std::to_string(lineno);
    Document d;
    d.id = require_string(rec, "id", where);
    d.text = require_string(rec, "text", where);
    if (d.id.empty()) throw ParseError(where + ": empty document id");
    if (d.text.empty()) throw ParseError(where + ": empty document text");
    if (!seen.insert(d.id).second)
      throw IntegrityError(where + ": duplicate document id '" + d.id + "'");
    for (auto it = rec.begin(); it != rec.end(); ++it)
      if (it.key() != "id" && it.key() != "text") d.extra[it.key()] = *it;
    docs.push_back(std::move(d));
  });
  return docs;
}

inline json document_to_json(const Document& d) {
  json rec = d.extra;
  rec["id"] = d.id;
  rec["text"] = d.text;
  return rec;
}

inline void write_documents(const std::string& path,
                            const std::vector<Document>& docs) {
  std::vector<json> recs;
  recs.reserve(docs.size());
  for (const Document& d : docs) recs.push_back(document_to_json(d));
  write_jsonl(path, recs);
}

// Benchmark question sets used for decontamination: JSONL records with a
// non-empty "question" field; other fields are ignored.
inline std::vector<std::string> read_benchmark_questions(
    const std::string& path) {
  std::vector<std::string> questions;
  for_each_jsonl(path, [&](std::size_t lineno, const json& rec) {
    std::string where = path + ":" + std::to_string(lineno);
    std::string q = require_string(rec, "question", where);
    if (q.empty()) throw ParseError(where + ": empty benchmark question");
    questions.push_back(std::move(q));
  });
  return questions;
}

}  // namespace synthweave
