#pragma once

// Two-stage document filtering.
//
// Stage 1 (cold start): binary forest trained on synthetic positives vs.
// uniformly sampled corpus negatives; keeps docs with predicted
// probability >= accept_prob.
// Stage 2 (fine-grained, iterated): an LLM judge rates the previous
// reference set plus a fresh random sample on a 1-10 scale; a regression
// forest trained on those ratings scores the whole corpus, and docs with
// score strictly above the threshold survive.  "Above" is strict: a score
// of exactly 6.5 is excluded.

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "synthweave/corpus.hpp"
#include "synthweave/embed.hpp"
#include "synthweave/forest.hpp"
#include "synthweave/llmio.hpp"

namespace synthweave {

struct ReferenceSet {
  int iteration = 0;
  std::vector<std::string> doc_ids;        // sorted (set semantics)
  std::map<std::string, double> scores;    // present for iteration >= 1

  void sort_ids() { std::sort(doc_ids.begin(), doc_ids.end()); }
};

struct FilterParams {
  int n_trees = 100;
  int max_depth = 12;
  double threshold = 6.5;
  std::size_t neg_sample_size = 200;
  std::size_t extra_sample_size = 100;
  double accept_prob = 0.5;
  int judge_max_concurrency = 4;
  int rating_retries = 2;
  EmbedOptions embed;
};

// ------------------------------------------------------- scores.jsonl

inline void write_reference_set(const std::string& path,
                                const ReferenceSet& rs) {
  std::vector<json> recs;
  recs.reserve(rs.doc_ids.size());
  for (const std::string& id : rs.doc_ids) {
    json rec{{"doc_id", id}, {"iteration", rs.iteration}};
    auto it = rs.scores.find(id);
    if (it != rs.scores.end()) rec["score"] = it->second;
    recs.push_back(std::move(rec));
  }
  write_jsonl(path, recs);
}

inline ReferenceSet read_reference_set(const std::string& path) {
  ReferenceSet rs;
  bool first = true;
  for_each_jsonl(path, [&](std::size_t lineno, const json& rec) {
    std::string where = path + ":" + std::to_string(lineno);
    std::string id = require_string(rec, "doc_id", where);
    int iter = static_cast<int>(require_number(rec, "iteration", where));
    if (first) {
      rs.iteration = iter;
      first = false;
    } else if (iter != rs.iteration) {
      throw IntegrityError(where + ": mixed iteration values in one file");
    }
    rs.doc_ids.push_back(id);
    if (rec.contains("score")) rs.scores[id] = rec["score"].get<double>();
  });
  rs.sort_ids();
  return rs;
}

// ----------------------------------------------------------- stage 1

struct ColdStartResult {
  ReferenceSet ref;       // iteration 0
  Forest forest;
  std::vector<double> corpus_probs;  // aligned with the input corpus
};

inline ColdStartResult cold_start_filter(const std::vector<Document>& corpus,
                                         const std::vector<Document>& positives,
                                         EmbedBackend& embedder,
                                         const FilterParams& params,
                                         std::uint64_t seed) {
  if (positives.empty())
    throw ArgumentError("cold_start_filter: positives must be non-empty");
  if (corpus.size() <= params.neg_sample_size)
    throw ArgumentError("cold_start_filter: corpus must be larger than "
                        "neg_sample_size");
  if (params.accept_prob < 0.0 || params.accept_prob > 1.0)
    throw ArgumentError("cold_start_filter: accept_prob must lie in [0,1]");

  std::vector<EmbeddingVector> corpus_vecs =
      embed_batch(corpus, embedder, params.embed);
  std::vector<EmbeddingVector> pos_vecs =
      embed_batch(positives, embedder, params.embed);

  // Uniform negatives: seeded shuffle of corpus indices.
  std::vector<std::size_t> order(corpus.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(hash_combine(hash64("cold_start/negatives"), seed));
  rng.shuffle(order);

  std::vector<LabeledExample> examples;
  examples.reserve(positives.size() + params.neg_sample_size);
  for (const EmbeddingVector& v : pos_vecs) examples.push_back({v, 1.0});
  for (std::size_t i = 0; i < params.neg_sample_size; ++i)
    examples.push_back({corpus_vecs[order[i]], 0.0});

  ColdStartResult out;
  out.forest = train_forest(examples, ForestTask::binary, params.n_trees,
                            params.max_depth, seed);

  out.ref.iteration = 0;
  out.corpus_probs.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    double p = predict(out.forest, corpus_vecs[i]);
    out.corpus_probs.push_back(p);
    if (p >= params.accept_prob) out.ref.doc_ids.push_back(corpus[i].id);
  }
  out.ref.sort_ids();
  return out;
}

// ----------------------------------------------------------- stage 2

inline int parse_score(std::string_view raw) {
  std::size_t b = raw.find("<score>");
  if (b == std::string_view::npos)
    throw ParseError("rating: missing <score> tag");
  b += 7;
  std::size_t e = raw.find("</score>", b);
  if (e == std::string_view::npos)
    throw ParseError("rating: missing </score> tag");
  std::string_view body = raw.substr(b, e - b);
  std::size_t i = 0;
  while (i < body.size() && (body[i] == ' ' || body[i] == '\t')) ++i;
  std::size_t start = i;
  while (i < body.size() && std::isdigit(static_cast<unsigned char>(body[i])))
    ++i;
  if (start == i) throw ParseError("rating: score is not an integer");
  std::size_t end = i;
  while (i < body.size() && (body[i] == ' ' || body[i] == '\t')) ++i;
  if (i != body.size())
    throw ParseError("rating: trailing content inside <score>");
  int value = std::stoi(std::string(body.substr(start, end - start)));
  if (value < 1 || value > 10)
    throw ParseError("rating: score " + std::to_string(value) +
                     " outside 1-10");
  return value;
}

struct RefineResult {
  ReferenceSet ref;
  Forest forest;
  std::vector<std::string> skipped_doc_ids;  // unratable after retries
  std::vector<double> corpus_scores;         // aligned with the input corpus
};

inline RefineResult refine_iteration(const std::vector<Document>& corpus,
                                     const ReferenceSet& prev,
                                     ChatBackend& judge,
                                     EmbedBackend& embedder,
                                     const FilterParams& params,
                                     std::uint64_t seed) {
  if (prev.doc_ids.empty())
    throw ArgumentError("refine_iteration: previous reference set is empty");

  std::map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < corpus.size(); ++i) by_id[corpus[i].id] = i;

  // Training pool: prev reference set plus a fresh uniform sample.
  std::vector<std::size_t> pool;
  std::map<std::size_t, bool> in_pool;
  for (const std::string& id : prev.doc_ids) {
    auto it = by_id.find(id);
    if (it == by_id.end())
      throw IntegrityError("refine_iteration: reference doc '" + id +
                           "' not present in corpus");
    if (!in_pool.count(it->second)) {
      in_pool[it->second] = true;
      pool.push_back(it->second);
    }
  }
  std::vector<std::size_t> order(corpus.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(hash_combine(hash64("refine/extra"),
                       hash_combine(seed,
                                    static_cast<std::uint64_t>(prev.iteration))));
  rng.shuffle(order);
  for (std::size_t i = 0;
       i < order.size() && pool.size() < in_pool.size() + params.extra_sample_size;
       ++i) {
    if (in_pool.count(order[i])) continue;
    in_pool[order[i]] = true;
    pool.push_back(order[i]);
  }
  std::sort(pool.begin(), pool.end());  // deterministic request order

  // Judge ratings (temperature 0), with per-document retries.
  std::vector<ChatRequest> reqs;
  reqs.reserve(pool.size());
  for (std::size_t idx : pool) {
    ChatRequest req;
    req.user = prompts::render(prompts::kRating, {{"text", corpus[idx].text}});
    req.temperature = 0.0;
    reqs.push_back(std::move(req));
  }

  std::vector<double> ratings(pool.size(), 0.0);
  std::vector<bool> rated(pool.size(), false);
  RefineResult out;
  std::vector<std::size_t> pending(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) pending[i] = i;
  for (int attempt = 0; attempt <= params.rating_retries && !pending.empty();
       ++attempt) {
    std::vector<ChatRequest> round;
    round.reserve(pending.size());
    for (std::size_t i : pending) round.push_back(reqs[i]);
    std::vector<CompletionResult> res = complete_batch(
        judge, round, static_cast<std::size_t>(params.judge_max_concurrency));
    std::vector<std::size_t> still;
    for (std::size_t k = 0; k < pending.size(); ++k) {
      std::size_t i = pending[k];
      if (!res[k].ok) {
        still.push_back(i);
        continue;
      }
      try {
        ratings[i] = static_cast<double>(parse_score(res[k].text));
        rated[i] = true;
      } catch (const ParseError&) {
        still.push_back(i);
      }
    }
    pending = std::move(still);
  }
  for (std::size_t i : pending)
    out.skipped_doc_ids.push_back(corpus[pool[i]].id);
  std::sort(out.skipped_doc_ids.begin(), out.skipped_doc_ids.end());

  std::vector<EmbeddingVector> corpus_vecs =
      embed_batch(corpus, embedder, params.embed);

  std::vector<LabeledExample> examples;
  for (std::size_t i = 0; i < pool.size(); ++i)
    if (rated[i]) examples.push_back({corpus_vecs[pool[i]], ratings[i]});
  if (examples.empty())
    throw PipelineError("refine_iteration: every judge rating failed");

  out.forest = train_forest(examples, ForestTask::regression, params.n_trees,
                            params.max_depth, seed);

  out.ref.iteration = prev.iteration + 1;
  out.corpus_scores.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    double score = predict(out.forest, corpus_vecs[i]);
    out.corpus_scores.push_back(score);
    if (score > params.threshold) {  // strictly above
      out.ref.doc_ids.push_back(corpus[i].id);
      out.ref.scores[corpus[i].id] = score;
    }
  }
  out.ref.sort_ids();
  return out;
}

}  // namespace synthweave
