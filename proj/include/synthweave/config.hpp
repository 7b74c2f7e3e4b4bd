#pragma once

// Pipeline configuration: one JSON document that every subcommand shares.
// Unset fields take the documented defaults; the fully resolved document
// (defaults materialized, overrides applied) is what gets hashed into the
// run manifests.

#include <string>

#include "synthweave/common.hpp"
#include "synthweave/filter.hpp"
#include "synthweave/graph.hpp"
#include "synthweave/jsonl.hpp"
#include "synthweave/llmio.hpp"
#include "synthweave/qagen.hpp"

namespace synthweave {

inline BackendKind backend_kind_from_string(const std::string& s) {
  if (s == "mock") return BackendKind::mock;
  if (s == "remote") return BackendKind::remote;
  throw ArgumentError("config: backend kind must be 'mock' or 'remote', got '" +
                      s + "'");
}

inline std::string backend_kind_to_string(BackendKind k) {
  return k == BackendKind::mock ? "mock" : "remote";
}

inline BackendConfig backend_config_from_json(const json& j,
                                              std::uint64_t default_seed,
                                              const std::string& default_env) {
  BackendConfig c;
  c.seed = default_seed;
  c.api_key_env = default_env;
  if (j.is_object()) {
    if (j.contains("kind"))
      c.kind = backend_kind_from_string(j["kind"].get<std::string>());
    if (j.contains("endpoint")) c.endpoint = j["endpoint"].get<std::string>();
    if (j.contains("model")) c.model = j["model"].get<std::string>();
    if (j.contains("api_key_env"))
      c.api_key_env = j["api_key_env"].get<std::string>();
    if (j.contains("max_concurrency"))
      c.max_concurrency = j["max_concurrency"].get<int>();
    if (j.contains("max_retries")) c.max_retries = j["max_retries"].get<int>();
    if (j.contains("base_backoff_ms"))
      c.base_backoff_ms = j["base_backoff_ms"].get<int>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  }
  c.validate();
  return c;
}

inline json backend_config_to_json(const BackendConfig& c) {
  return json{{"kind", backend_kind_to_string(c.kind)},
              {"endpoint", c.endpoint},
              {"model", c.model},
              {"api_key_env", c.api_key_env},
              {"max_concurrency", c.max_concurrency},
              {"max_retries", c.max_retries},
              {"base_backoff_ms", c.base_backoff_ms},
              {"seed", c.seed}};
}

struct PipelineConfig {
  std::uint64_t seed = 0;

  // paths
  std::string corpus;
  std::string positives;
  std::string benchmarks;
  std::string workdir = "work";

  // backends
  BackendConfig question_llm;
  BackendConfig answer_llm;
  BackendConfig judge_llm;
  BackendConfig embedding;
  std::size_t embed_dim = 256;

  // filter
  FilterParams filter;
  int filter_iterations = 2;

  // graph + walks
  double graph_epsilon = 1e-6;
  WalkConfig walk;

  // generation
  std::size_t level1_quota = 5;
  std::size_t level2_quota = 5;
  std::size_t level3_quota = 3;
  double gen_temperature = 0.75;

  // post-processing
  DedupParams dedup;
  std::size_t decontam_ngram = 8;

  // fully resolved config document, for manifest hashing
  json effective = json::object();
  // flags given on the command line (already folded into the fields above);
  // recorded verbatim in every manifest
  json cli_overrides = json::object();

  std::string config_hash() const { return to_hex(hash64(effective.dump())); }

  void rebuild_effective() {
    effective = json{
        {"seed", seed},
        {"paths",
         {{"corpus", corpus},
          {"positives", positives},
          {"benchmarks", benchmarks},
          {"workdir", workdir}}},
        {"question_llm", backend_config_to_json(question_llm)},
        {"answer_llm", backend_config_to_json(answer_llm)},
        {"judge_llm", backend_config_to_json(judge_llm)},
        {"embedding", backend_config_to_json(embedding)},
        {"embed_dim", embed_dim},
        {"filter",
         {{"n_trees", filter.n_trees},
          {"max_depth", filter.max_depth},
          {"threshold", filter.threshold},
          {"iterations", filter_iterations},
          {"neg_sample_size", filter.neg_sample_size},
          {"extra_sample_size", filter.extra_sample_size},
          {"accept_prob", filter.accept_prob},
          {"rating_retries", filter.rating_retries}}},
        {"graph",
         {{"epsilon", graph_epsilon},
          {"epochs", walk.epochs},
          {"topic_steps", walk.topic_steps},
          {"kc_steps", walk.kc_steps}}},
        {"generation",
         {{"level1_quota", level1_quota},
          {"level2_quota", level2_quota},
          {"level3_quota", level3_quota},
          {"temperature", gen_temperature}}},
        {"dedup",
         {{"shingle_n", dedup.shingle_n},
          {"jaccard_threshold", dedup.jaccard_threshold}}},
        {"decontamination", {{"ngram_n", decontam_ngram}}}};
  }
};

inline PipelineConfig parse_config(const json& j) {
  if (!j.is_object()) throw ParseError("config: top level must be an object");
  if (!j.contains("seed"))
    throw ArgumentError("config: 'seed' is required");
  PipelineConfig cfg;
  cfg.seed = j["seed"].get<std::uint64_t>();

  if (j.contains("paths")) {
    const json& p = j["paths"];
    if (p.contains("corpus")) cfg.corpus = p["corpus"].get<std::string>();
    if (p.contains("positives"))
      cfg.positives = p["positives"].get<std::string>();
    if (p.contains("benchmarks"))
      cfg.benchmarks = p["benchmarks"].get<std::string>();
    if (p.contains("workdir")) cfg.workdir = p["workdir"].get<std::string>();
  }

  const std::string llm_env = "SYNTHWEAVE_LLM_API_KEY";
  const std::string embed_env = "SYNTHWEAVE_EMBED_API_KEY";
  cfg.question_llm = backend_config_from_json(
      j.contains("question_llm") ? j["question_llm"] : json(), cfg.seed,
      llm_env);
  cfg.answer_llm = backend_config_from_json(
      j.contains("answer_llm") ? j["answer_llm"] : json(), cfg.seed, llm_env);
  cfg.judge_llm = backend_config_from_json(
      j.contains("judge_llm") ? j["judge_llm"] : json(), cfg.seed, llm_env);
  cfg.embedding = backend_config_from_json(
      j.contains("embedding") ? j["embedding"] : json(), cfg.seed, embed_env);
  if (j.contains("embedding") && j["embedding"].contains("dim"))
    cfg.embed_dim = j["embedding"]["dim"].get<std::size_t>();
  if (cfg.embed_dim == 0)
    throw ArgumentError("config: embedding.dim must be positive");

  if (j.contains("filter")) {
    const json& f = j["filter"];
    if (f.contains("n_trees")) cfg.filter.n_trees = f["n_trees"].get<int>();
    if (f.contains("max_depth"))
      cfg.filter.max_depth = f["max_depth"].get<int>();
    if (f.contains("threshold"))
      cfg.filter.threshold = f["threshold"].get<double>();
    if (f.contains("iterations"))
      cfg.filter_iterations = f["iterations"].get<int>();
    if (f.contains("neg_sample_size"))
      cfg.filter.neg_sample_size = f["neg_sample_size"].get<std::size_t>();
    if (f.contains("extra_sample_size"))
      cfg.filter.extra_sample_size = f["extra_sample_size"].get<std::size_t>();
    if (f.contains("accept_prob"))
      cfg.filter.accept_prob = f["accept_prob"].get<double>();
    if (f.contains("rating_retries"))
      cfg.filter.rating_retries = f["rating_retries"].get<int>();
    if (cfg.filter_iterations < 0)
      throw ArgumentError("config: filter.iterations must be >= 0");
  }
  cfg.filter.judge_max_concurrency = cfg.judge_llm.max_concurrency;

  if (j.contains("graph")) {
    const json& g = j["graph"];
    if (g.contains("epsilon")) cfg.graph_epsilon = g["epsilon"].get<double>();
    if (g.contains("epochs")) cfg.walk.epochs = g["epochs"].get<int>();
    if (g.contains("topic_steps"))
      cfg.walk.topic_steps = g["topic_steps"].get<std::vector<int>>();
    if (g.contains("kc_steps"))
      cfg.walk.kc_steps = g["kc_steps"].get<std::vector<int>>();
  }
  cfg.walk.seed = cfg.seed;
  cfg.walk.validate();
  if (!(cfg.graph_epsilon > 0.0))
    throw ArgumentError("config: graph.epsilon must be > 0");

  if (j.contains("generation")) {
    const json& g = j["generation"];
    if (g.contains("level1_quota"))
      cfg.level1_quota = g["level1_quota"].get<std::size_t>();
    if (g.contains("level2_quota"))
      cfg.level2_quota = g["level2_quota"].get<std::size_t>();
    if (g.contains("level3_quota"))
      cfg.level3_quota = g["level3_quota"].get<std::size_t>();
    if (g.contains("temperature"))
      cfg.gen_temperature = g["temperature"].get<double>();
  }

  if (j.contains("dedup")) {
    const json& d = j["dedup"];
    if (d.contains("shingle_n"))
      cfg.dedup.shingle_n = d["shingle_n"].get<std::size_t>();
    if (d.contains("jaccard_threshold"))
      cfg.dedup.jaccard_threshold = d["jaccard_threshold"].get<double>();
  }
  if (j.contains("decontamination")) {
    const json& d = j["decontamination"];
    if (d.contains("ngram_n"))
      cfg.decontam_ngram = d["ngram_n"].get<std::size_t>();
  }

  cfg.rebuild_effective();
  return cfg;
}

inline PipelineConfig load_config(const std::string& path) {
  json j = json::parse(read_text_file(path), nullptr, false);
  if (j.is_discarded()) throw ParseError(path + ": invalid JSON config");
  try {
    return parse_config(j);
  } catch (const Error& e) {
    throw ArgumentError(path + ": " + e.what());
  }
}

}  // namespace synthweave
