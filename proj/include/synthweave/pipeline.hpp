#pragma once

// Stage runners behind the CLI.  Every stage reads its inputs from files,
// writes its artifact(s) plus a manifest.json into
// <workdir>/<stage-name>/, and returns the manifest.  Stage artifacts are
// the only inter-stage contract, so `pipeline` is literally the stages run
// back to back with default wiring.
//
// Manifests record the effective-config hash, the seed, every input
// file's content hash, output counts, and any CLI flag overrides — but no
// timestamps, so reruns with identical inputs are byte-identical.

#include <filesystem>
#include <memory>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "synthweave/concepts.hpp"
#include "synthweave/config.hpp"
#include "synthweave/corpus.hpp"
#include "synthweave/remote.hpp"
#include "synthweave/scaling.hpp"

namespace synthweave {

namespace detail {

inline std::string file_hash(const std::string& path) {
  return to_hex(hash64(read_text_file(path)));
}

inline std::string stage_dir(const PipelineConfig& cfg,
                             const std::string& stage) {
  return (std::filesystem::path(cfg.workdir) / stage).string();
}

inline void ensure_dir(const std::string& dir) {
  std::filesystem::create_directories(dir);
}

}  // namespace detail

// Missing or unconfigured inputs are usage errors (exit 2), caught before
// any stage work begins.
inline void require_input(const std::string& path, const std::string& what) {
  if (path.empty())
    throw ArgumentError(what + " path is not configured");
  if (!std::filesystem::exists(path))
    throw ArgumentError(what + " not found: " + path);
}

struct StageManifest {
  std::string stage;
  json inputs = json::object();
  json counts = json::object();
  std::vector<std::string> artifacts;

  explicit StageManifest(std::string name) : stage(std::move(name)) {}

  void add_input(const std::string& name, const std::string& path) {
    inputs[name] = json{{"path", path}, {"hash", detail::file_hash(path)}};
  }

  json write(const PipelineConfig& cfg, const std::string& dir) const {
    json m{{"stage", stage},          {"config_hash", cfg.config_hash()},
           {"seed", cfg.seed},        {"inputs", inputs},
           {"counts", counts},        {"artifacts", artifacts},
           {"overrides", cfg.cli_overrides}};
    write_text_file(dir + "/manifest.json", m.dump(2) + "\n");
    return m;
  }
};

// Wraps stage work so failures carry the stage name.
template <typename Fn>
inline void stage_guard(const std::string& stage, Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    throw PipelineError(stage + ": " + e.what());
  }
}

// ------------------------------------------------------ shared readers

inline std::vector<ConceptSet> read_concept_sets(const std::string& path) {
  std::vector<ConceptSet> sets;
  for_each_jsonl(path, [&](std::size_t lineno, const json& rec) {
    try {
      sets.push_back(concept_set_from_json(rec));
    } catch (const Error& e) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  });
  return sets;
}

inline std::vector<SampledConceptSet> read_samples(const std::string& path) {
  std::vector<SampledConceptSet> samples;
  for_each_jsonl(path, [&](std::size_t lineno, const json& rec) {
    try {
      samples.push_back(sample_from_json(rec));
    } catch (const Error& e) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  });
  return samples;
}

inline std::vector<QuestionRecord> read_questions(const std::string& path) {
  std::vector<QuestionRecord> qs;
  for_each_jsonl(path, [&](std::size_t lineno, const json& rec) {
    try {
      qs.push_back(question_from_json(rec));
    } catch (const Error& e) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  });
  return qs;
}

// Documents of `corpus` retained by `ref`, in corpus order.
inline std::vector<Document> select_documents(
    const std::vector<Document>& corpus, const ReferenceSet& ref) {
  std::unordered_set<std::string> keep(ref.doc_ids.begin(),
                                       ref.doc_ids.end());
  std::vector<Document> out;
  for (const Document& d : corpus)
    if (keep.count(d.id)) out.push_back(d);
  if (out.size() != keep.size())
    throw IntegrityError(
        "reference set names documents missing from the corpus");
  return out;
}

// Default scores artifact after the configured filter chain.
inline std::string scores_after_filter(const PipelineConfig& cfg) {
  if (cfg.filter_iterations <= 0)
    return detail::stage_dir(cfg, "filter-coldstart") + "/scores.jsonl";
  return detail::stage_dir(cfg, "filter-refine-" +
                                    std::to_string(cfg.filter_iterations)) +
         "/scores.jsonl";
}

// ------------------------------------------------------------- stages

inline json run_filter_coldstart(const PipelineConfig& cfg) {
  const std::string stage = "filter-coldstart";
  require_input(cfg.corpus, "corpus");
  require_input(cfg.positives, "positives");
  StageManifest m(stage);
  std::string dir = detail::stage_dir(cfg, stage);
  stage_guard(stage, [&] {
    m.add_input("corpus", cfg.corpus);
    m.add_input("positives", cfg.positives);
    std::vector<Document> corpus = read_documents(cfg.corpus);
    std::vector<Document> positives = read_documents(cfg.positives);
    std::unique_ptr<EmbedBackend> embedder =
        make_embed_backend(cfg.embedding, cfg.embed_dim);
    ColdStartResult r =
        cold_start_filter(corpus, positives, *embedder, cfg.filter, cfg.seed);
    detail::ensure_dir(dir);
    write_reference_set(dir + "/scores.jsonl", r.ref);
    write_text_file(dir + "/forest.json", forest_to_json(r.forest).dump() + "\n");
    m.counts = json{{"corpus", corpus.size()},
                    {"positives", positives.size()},
                    {"retained", r.ref.doc_ids.size()}};
    m.artifacts = {"scores.jsonl", "forest.json"};
  });
  return m.write(cfg, dir);
}

inline json run_filter_refine(const PipelineConfig& cfg,
                              std::string scores_path = "") {
  const std::string stage = "filter-refine";
  if (scores_path.empty())
    scores_path = detail::stage_dir(cfg, "filter-coldstart") + "/scores.jsonl";
  require_input(cfg.corpus, "corpus");
  require_input(scores_path, "scores");
  StageManifest m(stage);
  std::string dir;
  stage_guard(stage, [&] {
    m.add_input("corpus", cfg.corpus);
    m.add_input("scores", scores_path);
    std::vector<Document> corpus = read_documents(cfg.corpus);
    ReferenceSet prev = read_reference_set(scores_path);
    std::unique_ptr<ChatBackend> judge = make_chat_backend(cfg.judge_llm);
    std::unique_ptr<EmbedBackend> embedder =
        make_embed_backend(cfg.embedding, cfg.embed_dim);
    RefineResult r =
        refine_iteration(corpus, prev, *judge, *embedder, cfg.filter, cfg.seed);
    dir = detail::stage_dir(cfg,
                            stage + "-" + std::to_string(r.ref.iteration));
    detail::ensure_dir(dir);
    write_reference_set(dir + "/scores.jsonl", r.ref);
    write_text_file(dir + "/forest.json", forest_to_json(r.forest).dump() + "\n");
    std::vector<json> skipped;
    for (const std::string& id : r.skipped_doc_ids)
      skipped.push_back(json{{"doc_id", id}});
    write_jsonl(dir + "/skipped.jsonl", skipped);
    m.counts = json{{"corpus", corpus.size()},
                    {"iteration", r.ref.iteration},
                    {"retained", r.ref.doc_ids.size()},
                    {"skipped", r.skipped_doc_ids.size()}};
    m.artifacts = {"scores.jsonl", "forest.json", "skipped.jsonl"};
  });
  return m.write(cfg, dir);
}

inline json run_extract_concepts(const PipelineConfig& cfg,
                                 std::string scores_path = "") {
  const std::string stage = "extract-concepts";
  if (scores_path.empty()) scores_path = scores_after_filter(cfg);
  require_input(cfg.corpus, "corpus");
  require_input(scores_path, "scores");
  StageManifest m(stage);
  std::string dir = detail::stage_dir(cfg, stage);
  stage_guard(stage, [&] {
    m.add_input("corpus", cfg.corpus);
    m.add_input("scores", scores_path);
    std::vector<Document> corpus = read_documents(cfg.corpus);
    ReferenceSet ref = read_reference_set(scores_path);
    std::vector<Document> docs = select_documents(corpus, ref);
    std::unique_ptr<ChatBackend> backend = make_chat_backend(cfg.question_llm);
    std::vector<json> out, skipped;
    for (const Document& d : docs) {
      try {
        ConceptSet cs = extract_concepts(d, *backend, cfg.gen_temperature);
        out.push_back(concept_set_to_json(cs));
      } catch (const ExtractionError& e) {
        skipped.push_back(json{{"doc_id", d.id}, {"error", e.what()}});
      }
    }
    detail::ensure_dir(dir);
    write_jsonl(dir + "/concepts.jsonl", out);
    write_jsonl(dir + "/skipped.jsonl", skipped);
    m.counts = json{{"documents", docs.size()},
                    {"extracted", out.size()},
                    {"skipped", skipped.size()}};
    m.artifacts = {"concepts.jsonl", "skipped.jsonl"};
  });
  return m.write(cfg, dir);
}

inline json run_build_graph(const PipelineConfig& cfg,
                            std::string concepts_path = "") {
  const std::string stage = "build-graph";
  if (concepts_path.empty())
    concepts_path =
        detail::stage_dir(cfg, "extract-concepts") + "/concepts.jsonl";
  require_input(concepts_path, "concepts");
  StageManifest m(stage);
  std::string dir = detail::stage_dir(cfg, stage);
  stage_guard(stage, [&] {
    m.add_input("concepts", concepts_path);
    std::vector<ConceptSet> sets = read_concept_sets(concepts_path);
    ConceptGraph g = build_graph(sets, cfg.graph_epsilon);
    detail::ensure_dir(dir);
    write_text_file(dir + "/graph.json", graph_to_json(g).dump(2) + "\n");
    m.counts = json{{"concept_sets", sets.size()},
                    {"topics", g.topics.size()},
                    {"key_concepts", g.kcs.size()},
                    {"topic_topic_edges", g.tt_edges.size()},
                    {"topic_kc_edges", g.tk_edges.size()},
                    {"kc_kc_edges", g.kk_edges.size()}};
    m.artifacts = {"graph.json"};
  });
  return m.write(cfg, dir);
}

inline json run_sample_concepts(const PipelineConfig& cfg,
                                std::string graph_path = "") {
  const std::string stage = "sample-concepts";
  if (graph_path.empty())
    graph_path = detail::stage_dir(cfg, "build-graph") + "/graph.json";
  require_input(graph_path, "graph");
  StageManifest m(stage);
  std::string dir = detail::stage_dir(cfg, stage);
  stage_guard(stage, [&] {
    m.add_input("graph", graph_path);
    json gj = json::parse(read_text_file(graph_path), nullptr, false);
    if (gj.is_discarded())
      throw ParseError(graph_path + ": invalid JSON");
    ConceptGraph g = graph_from_json(gj);
    WalkConfig wc = cfg.walk;
    wc.seed = cfg.seed;
    SampleRun run = sample_kg(g, wc);
    std::vector<json> recs;
    for (const SampledConceptSet& s : run.samples)
      recs.push_back(sample_to_json(s));
    detail::ensure_dir(dir);
    write_jsonl(dir + "/samples.jsonl", recs);
    m.counts = json{{"topics", g.topics.size()},
                    {"epochs", wc.epochs},
                    {"samples", run.samples.size()},
                    {"skipped", run.skipped}};
    m.artifacts = {"samples.jsonl"};
  });
  return m.write(cfg, dir);
}

inline json run_gen_questions(const PipelineConfig& cfg, int level,
                              std::string scores_path = "",
                              std::string concepts_path = "",
                              std::string samples_path = "") {
  if (level < 1 || level > 3)
    throw ArgumentError("gen-questions: level must be 1, 2 or 3");
  const std::string stage = "gen-questions-l" + std::to_string(level);
  if (scores_path.empty()) scores_path = scores_after_filter(cfg);
  if (concepts_path.empty())
    concepts_path =
        detail::stage_dir(cfg, "extract-concepts") + "/concepts.jsonl";
  if (samples_path.empty())
    samples_path =
        detail::stage_dir(cfg, "sample-concepts") + "/samples.jsonl";

  require_input(cfg.corpus, "corpus");
  if (level == 1) require_input(scores_path, "scores");
  if (level >= 2) require_input(concepts_path, "concepts");
  if (level == 3) require_input(samples_path, "samples");

  StageManifest m(stage);
  std::string dir = detail::stage_dir(cfg, stage);
  stage_guard(stage, [&] {
    m.add_input("corpus", cfg.corpus);
    std::vector<Document> corpus = read_documents(cfg.corpus);
    std::unordered_map<std::string, std::size_t> by_id;
    for (std::size_t i = 0; i < corpus.size(); ++i) by_id[corpus[i].id] = i;

    std::unique_ptr<ChatBackend> backend = make_chat_backend(cfg.question_llm);
    GenWarnings warn;
    std::vector<QuestionRecord> questions;
    std::size_t sources = 0, refusals = 0;

    if (level == 1) {
      m.add_input("scores", scores_path);
      ReferenceSet ref = read_reference_set(scores_path);
      std::vector<Document> docs = select_documents(corpus, ref);
      sources = docs.size();
      for (const Document& d : docs) {
        std::vector<QuestionRecord> qs = gen_level1(
            d, *backend, cfg.level1_quota, &warn, cfg.gen_temperature);
        if (qs.empty()) ++refusals;
        questions.insert(questions.end(), qs.begin(), qs.end());
      }
    } else if (level == 2) {
      m.add_input("concepts", concepts_path);
      std::vector<ConceptSet> sets = read_concept_sets(concepts_path);
      sources = sets.size();
      for (const ConceptSet& cs : sets) {
        auto it = by_id.find(cs.doc_id);
        if (it == by_id.end())
          throw IntegrityError("concept set references unknown document '" +
                               cs.doc_id + "'");
        std::vector<QuestionRecord> qs =
            gen_level2(corpus[it->second], cs, *backend, cfg.level2_quota,
                       &warn, cfg.gen_temperature);
        questions.insert(questions.end(), qs.begin(), qs.end());
      }
    } else {
      m.add_input("concepts", concepts_path);
      m.add_input("samples", samples_path);
      std::vector<ConceptSet> sets = read_concept_sets(concepts_path);
      std::vector<SampledConceptSet> samples = read_samples(samples_path);
      sources = samples.size();
      for (const SampledConceptSet& s : samples) {
        std::vector<std::string> ids = ground_documents(s, sets, 2);
        std::vector<Document> grounding;
        for (const std::string& id : ids) {
          auto it = by_id.find(id);
          if (it == by_id.end())
            throw IntegrityError("grounding references unknown document '" +
                                 id + "'");
          grounding.push_back(corpus[it->second]);
        }
        std::vector<QuestionRecord> qs = gen_level3(
            s, grounding, *backend, cfg.level3_quota, &warn,
            cfg.gen_temperature);
        questions.insert(questions.end(), qs.begin(), qs.end());
      }
    }

    std::vector<json> recs;
    for (const QuestionRecord& q : questions)
      recs.push_back(question_to_json(q));
    detail::ensure_dir(dir);
    write_jsonl(dir + "/questions.jsonl", recs);
    m.counts = json{{"sources", sources},
                    {"questions", questions.size()},
                    {"refusals", refusals},
                    {"dropped_blocks", warn.dropped_blocks},
                    {"truncated_blocks", warn.truncated_blocks}};
    m.artifacts = {"questions.jsonl"};
  });
  return m.write(cfg, dir);
}

inline json run_dedup(const PipelineConfig& cfg,
                      std::vector<std::string> inputs = {}) {
  const std::string stage = "dedup";
  if (inputs.empty()) {
    for (int level = 1; level <= 3; ++level)
      inputs.push_back(
          detail::stage_dir(cfg, "gen-questions-l" + std::to_string(level)) +
          "/questions.jsonl");
  }
  for (const std::string& p : inputs) require_input(p, "questions");
  StageManifest m(stage);
  std::string dir = detail::stage_dir(cfg, stage);
  stage_guard(stage, [&] {
    std::vector<QuestionRecord> all;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      m.add_input("questions_" + std::to_string(i), inputs[i]);
      std::vector<QuestionRecord> qs = read_questions(inputs[i]);
      all.insert(all.end(), qs.begin(), qs.end());
    }
    std::vector<QuestionRecord> kept = dedup(all, cfg.dedup);
    std::vector<json> recs;
    for (const QuestionRecord& q : kept) recs.push_back(question_to_json(q));
    detail::ensure_dir(dir);
    write_jsonl(dir + "/questions.jsonl", recs);
    m.counts = json{{"input", all.size()},
                    {"output", kept.size()},
                    {"removed", all.size() - kept.size()}};
    m.artifacts = {"questions.jsonl"};
  });
  return m.write(cfg, dir);
}

inline json run_decontaminate(const PipelineConfig& cfg,
                              std::string questions_path = "") {
  const std::string stage = "decontaminate";
  if (questions_path.empty())
    questions_path = detail::stage_dir(cfg, "dedup") + "/questions.jsonl";
  require_input(questions_path, "questions");
  require_input(cfg.benchmarks, "benchmarks");
  StageManifest m(stage);
  std::string dir = detail::stage_dir(cfg, stage);
  stage_guard(stage, [&] {
    m.add_input("questions", questions_path);
    m.add_input("benchmarks", cfg.benchmarks);
    std::vector<QuestionRecord> qs = read_questions(questions_path);
    std::vector<std::string> bench = read_benchmark_questions(cfg.benchmarks);
    std::vector<QuestionRecord> kept =
        decontaminate(qs, bench, cfg.decontam_ngram);
    std::vector<json> recs;
    for (const QuestionRecord& q : kept) recs.push_back(question_to_json(q));
    detail::ensure_dir(dir);
    write_jsonl(dir + "/questions.jsonl", recs);
    m.counts = json{{"input", qs.size()},
                    {"benchmarks", bench.size()},
                    {"output", kept.size()},
                    {"removed", qs.size() - kept.size()}};
    m.artifacts = {"questions.jsonl"};
  });
  return m.write(cfg, dir);
}

inline json run_gen_answers(const PipelineConfig& cfg,
                            std::string questions_path = "") {
  const std::string stage = "gen-answers";
  if (questions_path.empty())
    questions_path =
        detail::stage_dir(cfg, "decontaminate") + "/questions.jsonl";
  require_input(questions_path, "questions");
  StageManifest m(stage);
  std::string dir = detail::stage_dir(cfg, stage);
  stage_guard(stage, [&] {
    m.add_input("questions", questions_path);
    std::vector<QuestionRecord> qs = read_questions(questions_path);
    std::unique_ptr<ChatBackend> backend = make_chat_backend(cfg.answer_llm);
    GenAnswersResult r =
        gen_answers(qs, *backend, cfg.answer_llm.model,
                    static_cast<std::size_t>(cfg.answer_llm.max_concurrency));
    std::vector<json> pairs, failures;
    for (const QAPair& p : r.pairs) pairs.push_back(qa_to_json(p));
    for (const auto& f : r.failures)
      failures.push_back(json{{"qid", f.qid}, {"error", f.error}});
    detail::ensure_dir(dir);
    write_jsonl(dir + "/qa.jsonl", pairs);
    write_jsonl(dir + "/failures.jsonl", failures);
    m.counts = json{{"questions", qs.size()},
                    {"answers", r.pairs.size()},
                    {"failures", r.failures.size()}};
    m.artifacts = {"qa.jsonl", "failures.jsonl"};
  });
  return m.write(cfg, dir);
}

// --------------------------------------------------- fitting commands

inline json run_fit(const PipelineConfig& cfg, const std::string& points_path,
                    const std::string& form) {
  const std::string stage = "fit";
  require_input(points_path, "points");
  if (form != "rectified" && form != "marginal" && form != "power")
    throw ArgumentError("fit: --form must be rectified, marginal or power");
  StageManifest m(stage);
  std::string dir = detail::stage_dir(cfg, stage);
  stage_guard(stage, [&] {
    m.add_input("points", points_path);
    std::vector<DataPoint> pts = read_points(points_path);
    json fj;
    if (form == "rectified")
      fj = fit_to_json(fit_rectified(pts, cfg.seed), cfg.seed);
    else if (form == "marginal")
      fj = fit_to_json(fit_marginal(pts, cfg.seed), cfg.seed);
    else
      fj = fit_to_json(fit_powerlaw(pts, cfg.seed), cfg.seed);
    detail::ensure_dir(dir);
    write_text_file(dir + "/fit.json", fj.dump(2) + "\n");
    m.counts = json{{"points", pts.size()}};
    m.artifacts = {"fit.json"};
  });
  return m.write(cfg, dir);
}

inline RectifiedFit load_rectified_fit(const std::string& path) {
  json j = json::parse(read_text_file(path), nullptr, false);
  if (j.is_discarded()) throw ParseError(path + ": invalid JSON");
  return rectified_fit_from_json(j);
}

inline json run_predict(const PipelineConfig& cfg, std::string fit_path,
                        double tokens) {
  const std::string stage = "predict";
  if (fit_path.empty())
    fit_path = detail::stage_dir(cfg, "fit") + "/fit.json";
  require_input(fit_path, "fit");
  StageManifest m(stage);
  std::string dir = detail::stage_dir(cfg, stage);
  json result;
  stage_guard(stage, [&] {
    m.add_input("fit", fit_path);
    RectifiedFit fit = load_rectified_fit(fit_path);
    double err = predict(fit, tokens);
    result = json{{"tokens", tokens}, {"error_rate", err}};
    detail::ensure_dir(dir);
    write_text_file(dir + "/prediction.json", result.dump(2) + "\n");
    m.counts = json{{"predictions", 1}};
    m.artifacts = {"prediction.json"};
  });
  json manifest = m.write(cfg, dir);
  manifest["result"] = result;
  return manifest;
}

inline json run_tokens_for_target(const PipelineConfig& cfg,
                                  std::string fit_path, double target) {
  const std::string stage = "tokens-for-target";
  if (fit_path.empty())
    fit_path = detail::stage_dir(cfg, "fit") + "/fit.json";
  require_input(fit_path, "fit");
  StageManifest m(stage);
  std::string dir = detail::stage_dir(cfg, stage);
  json result;
  stage_guard(stage, [&] {
    m.add_input("fit", fit_path);
    RectifiedFit fit = load_rectified_fit(fit_path);
    double tokens = tokens_for_target(fit, target);
    result = json{{"target_error", target}, {"tokens", tokens}};
    detail::ensure_dir(dir);
    write_text_file(dir + "/tokens.json", result.dump(2) + "\n");
    m.counts = json{{"queries", 1}};
    m.artifacts = {"tokens.json"};
  });
  json manifest = m.write(cfg, dir);
  manifest["result"] = result;
  return manifest;
}

// Full chain with default wiring; identical to running each stage alone.
inline std::vector<json> run_pipeline(const PipelineConfig& cfg) {
  std::vector<json> manifests;
  manifests.push_back(run_filter_coldstart(cfg));
  std::string scores =
      detail::stage_dir(cfg, "filter-coldstart") + "/scores.jsonl";
  for (int i = 1; i <= cfg.filter_iterations; ++i) {
    manifests.push_back(run_filter_refine(cfg, scores));
    scores = detail::stage_dir(cfg, "filter-refine-" + std::to_string(i)) +
             "/scores.jsonl";
  }
  manifests.push_back(run_extract_concepts(cfg, scores));
  manifests.push_back(run_build_graph(cfg));
  manifests.push_back(run_sample_concepts(cfg));
  manifests.push_back(run_gen_questions(cfg, 1, scores));
  manifests.push_back(run_gen_questions(cfg, 2));
  manifests.push_back(run_gen_questions(cfg, 3));
  manifests.push_back(run_dedup(cfg));
  manifests.push_back(run_decontaminate(cfg));
  manifests.push_back(run_gen_answers(cfg));
  return manifests;
}

}  // namespace synthweave
