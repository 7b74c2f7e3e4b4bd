#pragma once

// Thin JSON-lines helpers on top of nlohmann::json.
//
// Writers always emit one record per line, LF terminated, with nlohmann's
// default key ordering (lexicographic) so that rewriting the same records
// produces byte-identical files.

#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "synthweave/common.hpp"

namespace synthweave {

using json = nlohmann::json;

// Streams a JSONL file, invoking fn(line_number, record) per non-empty
// line.  Line numbers are 1-based and included in parse errors.
inline void for_each_jsonl(const std::string& path,
                           const std::function<void(std::size_t,
                                                    const json&)>& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError("cannot open jsonl file: " + path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    json rec = json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (rec.is_discarded())
      throw ParseError(path + ":" + std::to_string(lineno) +
                       ": invalid JSON");
    fn(lineno, rec);
  }
}

inline std::vector<json> read_jsonl(const std::string& path) {
  std::vector<json> out;
  for_each_jsonl(path, [&](std::size_t, const json& rec) {
    out.push_back(rec);
  });
  return out;
}

inline void write_jsonl(const std::string& path,
                        const std::vector<json>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ArgumentError("cannot open jsonl file for writing: " + path);
  for (const json& rec : records) out << rec.dump() << '\n';
  if (!out) throw ArgumentError("short write: " + path);
}

// Convenience accessors with format diagnostics.

inline std::string require_string(const json& rec, const char* key,
                                  const std::string& where) {
  auto it = rec.find(key);
  if (it == rec.end() || !it->is_string())
    throw ParseError(where + ": missing string field '" + key + "'");
  return it->get<std::string>();
}

inline double require_number(const json& rec, const char* key,
                             const std::string& where) {
  auto it = rec.find(key);
  if (it == rec.end() || !it->is_number())
    throw ParseError(where + ": missing numeric field '" + key + "'");
  return it->get<double>();
}

}  // namespace synthweave
