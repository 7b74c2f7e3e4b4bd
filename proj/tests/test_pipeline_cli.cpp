// End-to-end pipeline over a 100-document mock fixture, plus the CLI
// binary: stage chaining, manifest counts, duplicate/contaminant removal,
// byte-level determinism, exit codes, and the fit subcommands.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "synthweave/pipeline.hpp"

namespace fs = std::filesystem;
using namespace synthweave;

namespace {

// ------------------------------------------------------------- fixture
//
// 100 documents: 59 distinct math-flavored docs (m00..m58), one exact
// copy of m00 planted as m59, and 40 fillers (f00..f39) with disjoint
// vocabulary.  The mock judge rates the math docs 9 and the fillers 2,
// so the refinement iterations retain exactly the 60 math docs; the
// planted copy then yields 5 level-1 and 5 level-2 questions that are
// exact duplicates of m00's, which dedup must remove.

const char kMathStem[] = "math equation theorem formula";

std::vector<std::string> math_vocab() {
  return {"math",        "equation", "solve",      "theorem",  "integral",
          "derivative",  "algebra",  "geometry",   "triangle", "matrix",
          "probability", "polynomial", "fraction", "calculus", "angle",
          "vector",      "prime",    "sum",        "product",  "formula"};
}

std::vector<std::string> filler_vocab() {
  return {"butter",  "flour",   "whisk",   "salad",   "travel", "beach",
          "hotel",   "luggage", "camera",  "sunrise", "garden", "flower",
          "piano",   "violin",  "pottery", "novel",   "poetry", "weather",
          "harbor",  "bridge",  "lantern", "recipe",  "painting", "kettle"};
}

std::string sample_words(const std::vector<std::string>& vocab,
                         std::size_t distinct, std::size_t total, Rng& rng,
                         const std::string& stem = "") {
  std::vector<std::size_t> idx(vocab.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  rng.shuffle(idx);
  std::string out = stem;
  for (std::size_t i = 0; i < total; ++i) {
    if (!out.empty()) out += " ";
    out += vocab[idx[i % distinct]];
  }
  return out;
}

std::string two_digit(const char* prefix, std::size_t n) {
  return std::string(prefix) + (n < 10 ? "0" : "") + std::to_string(n);
}

struct Fixture {
  fs::path root;
  fs::path corpus_path, positives_path, bench_plain_path, config_path;
  fs::path work;  // workdir shared by the baseline and determinism tests
  json config_json;

  Fixture() {
    root = fs::temp_directory_path() / "synthweave_pipeline_fixture";
    fs::remove_all(root);
    fs::create_directories(root);
    work = root / "work";

    Rng rng(515151);
    std::vector<json> corpus;
    std::vector<std::string> math_texts;
    for (std::size_t i = 0; i < 59; ++i)
      math_texts.push_back(
          sample_words(math_vocab(), 6, 10, rng, kMathStem));
    for (std::size_t i = 0; i < 59; ++i)
      corpus.push_back({{"id", two_digit("m", i)}, {"text", math_texts[i]}});
    corpus.push_back({{"id", "m59"}, {"text", math_texts[0]}});  // the copy
    for (std::size_t i = 0; i < 40; ++i)
      corpus.push_back({{"id", two_digit("f", i)},
                        {"text", sample_words(filler_vocab(), 8, 14, rng)}});
    corpus_path = root / "corpus.jsonl";
    write_jsonl(corpus_path.string(), corpus);

    std::vector<json> positives;
    for (std::size_t i = 0; i < 20; ++i)
      positives.push_back(
          {{"id", two_digit("p", i)},
           {"text", sample_words(math_vocab(), 6, 10, rng, kMathStem)}});
    positives_path = root / "positives.jsonl";
    write_jsonl(positives_path.string(), positives);

    std::vector<json> bench = {
        {{"question",
          "what is the capital of france and why does it matter"}},
        {{"question",
          "name three rivers that cross more than one national border"}},
        {{"question",
          "describe the plot of a famous nineteenth century novel"}}};
    bench_plain_path = root / "benchmarks_plain.jsonl";
    write_jsonl(bench_plain_path.string(), bench);

    config_json = {
        {"seed", 20240815},
        {"paths",
         {{"corpus", corpus_path.string()},
          {"positives", positives_path.string()},
          {"benchmarks", bench_plain_path.string()},
          {"workdir", work.string()}}},
        {"filter",
         {{"neg_sample_size", 30},
          {"extra_sample_size", 100},
          {"max_depth", 6},
          {"iterations", 2}}},
        {"graph", {{"epochs", 2}}},
        {"answer_llm", {{"model", "mock-answerer"}}}};
    config_path = root / "config.json";
    write_text_file(config_path.string(), config_json.dump(2) + "\n");
  }
};

const Fixture& fixture() {
  static Fixture f;
  return f;
}

PipelineConfig fixture_config() { return load_config(fixture().config_path.string()); }

std::map<std::string, std::string> snapshot_dir(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file())
      files[fs::relative(e.path(), dir).string()] =
          read_text_file(e.path().string());
  return files;
}

struct Baseline {
  std::vector<json> manifests;
  std::map<std::string, std::string> snapshot;
};

// One full library-level pipeline run, shared by the read-only tests.
// Determinism tests wipe the workdir and must restore identical bytes.
const Baseline& baseline() {
  static Baseline b = [] {
    Baseline out;
    fs::remove_all(fixture().work);
    out.manifests = run_pipeline(fixture_config());
    out.snapshot = snapshot_dir(fixture().work);
    return out;
  }();
  return b;
}

const json& manifest_at(std::size_t i) { return baseline().manifests.at(i); }

std::vector<QuestionRecord> stage_questions(const std::string& stage) {
  return read_questions((fixture().work / stage / "questions.jsonl").string());
}

double pair_jaccard(const QuestionRecord& a, const QuestionRecord& b,
                    const DedupParams& p = {}) {
  return jaccard(shingle_set(normalize_text(a.text), p.shingle_n),
                 shingle_set(normalize_text(b.text), p.shingle_n));
}

std::set<std::string> banned_ngrams(const std::vector<std::string>& bench,
                                    std::size_t n) {
  std::set<std::string> out;
  for (const auto& b : bench)
    for (const auto& g : word_ngrams(words(normalize_text(b)), n))
      out.insert(g);
  return out;
}

bool hits_banned(const QuestionRecord& q, const std::set<std::string>& banned,
                 std::size_t n) {
  for (const auto& g : word_ngrams(words(normalize_text(q.text)), n))
    if (banned.count(g)) return true;
  return false;
}

void expect_snapshots_equal(const std::map<std::string, std::string>& a,
                            const std::map<std::string, std::string>& b) {
  std::set<std::string> ka, kb;
  for (const auto& [k, v] : a) ka.insert(k);
  for (const auto& [k, v] : b) kb.insert(k);
  ASSERT_EQ(ka, kb);
  for (const auto& [k, v] : a) EXPECT_EQ(v, b.at(k)) << "file differs: " << k;
}

// ------------------------------------------------------------ CLI glue

struct CliResult {
  int code = -1;
  std::string out, err;
};

CliResult run_cli(const std::string& args) {
  static int call = 0;
  fs::path base = fs::temp_directory_path() /
                  ("synthweave_cli_" + std::to_string(call++));
  fs::path outp = base.string() + ".out", errp = base.string() + ".err";
  std::string cmd = std::string(SYNTHWEAVE_CLI_PATH) + " " + args + " > " +
                    outp.string() + " 2> " + errp.string();
  int rc = std::system(cmd.c_str());
  CliResult r;
  r.code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  r.out = read_text_file(outp.string());
  r.err = read_text_file(errp.string());
  fs::remove(outp);
  fs::remove(errp);
  return r;
}

std::string data_csv(const char* name) {
  return std::string(SYNTHWEAVE_SOURCE_DIR) + "/tests/data/" + name;
}

}  // namespace

// ------------------------------------------------------ pipeline counts

TEST(Pipeline, StageSequenceAndManifestShape) {
  const std::vector<std::string> want = {
      "filter-coldstart", "filter-refine",     "filter-refine",
      "extract-concepts", "build-graph",       "sample-concepts",
      "gen-questions-l1", "gen-questions-l2",  "gen-questions-l3",
      "dedup",            "decontaminate",     "gen-answers"};
  ASSERT_EQ(baseline().manifests.size(), want.size());
  std::string hash = fixture_config().config_hash();
  for (std::size_t i = 0; i < want.size(); ++i) {
    const json& m = manifest_at(i);
    EXPECT_EQ(m["stage"], want[i]) << i;
    EXPECT_EQ(m["config_hash"], hash);
    EXPECT_EQ(m["seed"], 20240815);
    EXPECT_TRUE(m["overrides"].is_object() && m["overrides"].empty());
    for (const auto& [name, in] : m["inputs"].items()) {
      EXPECT_TRUE(fs::exists(in["path"].get<std::string>())) << name;
      EXPECT_EQ(in["hash"].get<std::string>().size(), 16u);
    }
    ASSERT_FALSE(m["artifacts"].empty());
  }
  // every artifact (plus a manifest) exists in its stage directory
  const std::vector<std::string> dirs = {
      "filter-coldstart", "filter-refine-1",   "filter-refine-2",
      "extract-concepts", "build-graph",       "sample-concepts",
      "gen-questions-l1", "gen-questions-l2",  "gen-questions-l3",
      "dedup",            "decontaminate",     "gen-answers"};
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    fs::path d = fixture().work / dirs[i];
    EXPECT_TRUE(fs::exists(d / "manifest.json")) << dirs[i];
    for (const auto& a : manifest_at(i)["artifacts"])
      EXPECT_TRUE(fs::exists(d / a.get<std::string>()))
          << dirs[i] << "/" << a;
  }
}

TEST(Pipeline, FilterRetainsExactlyTheMathDocuments) {
  EXPECT_EQ(manifest_at(0)["counts"]["corpus"], 100);
  EXPECT_EQ(manifest_at(0)["counts"]["positives"], 20);
  EXPECT_EQ(manifest_at(1)["counts"]["iteration"], 1);
  EXPECT_EQ(manifest_at(2)["counts"]["iteration"], 2);
  EXPECT_EQ(manifest_at(2)["counts"]["retained"], 60);
  EXPECT_EQ(manifest_at(2)["counts"]["skipped"], 0);

  ReferenceSet ref = read_reference_set(
      (fixture().work / "filter-refine-2" / "scores.jsonl").string());
  std::set<std::string> ids(ref.doc_ids.begin(), ref.doc_ids.end());
  ASSERT_EQ(ids.size(), 60u);
  for (std::size_t i = 0; i < 59; ++i)
    EXPECT_TRUE(ids.count(two_digit("m", i))) << i;
  EXPECT_TRUE(ids.count("m59"));
  for (const std::string& id : ids) EXPECT_EQ(id[0], 'm') << id;
}

TEST(Pipeline, GenerationCountsFollowTheQuotas) {
  const json& extract = manifest_at(3)["counts"];
  EXPECT_EQ(extract["documents"], 60);
  EXPECT_EQ(extract["extracted"], 60);
  EXPECT_EQ(extract["skipped"], 0);

  const json& graph = manifest_at(4)["counts"];
  EXPECT_EQ(graph["concept_sets"], 60);
  int topics = graph["topics"].get<int>();
  EXPECT_GE(topics, 2);

  const json& samples = manifest_at(5)["counts"];
  EXPECT_EQ(samples["epochs"], 2);
  int n_samples = samples["samples"].get<int>();
  int n_skipped = samples["skipped"].get<int>();
  EXPECT_EQ(n_samples + n_skipped, 2 * topics);  // one walk per topic per epoch
  EXPECT_EQ(n_skipped, 0);

  const json& l1 = manifest_at(6)["counts"];
  EXPECT_EQ(l1["sources"], 60);
  EXPECT_EQ(l1["questions"], 300);  // quota 5 per retained doc
  EXPECT_EQ(l1["refusals"], 0);
  EXPECT_EQ(l1["dropped_blocks"], 0);

  const json& l2 = manifest_at(7)["counts"];
  EXPECT_EQ(l2["sources"], 60);
  EXPECT_EQ(l2["questions"], 300);  // exactly 5 per document pre-dedup

  const json& l3 = manifest_at(8)["counts"];
  EXPECT_EQ(l3["sources"], n_samples);
  EXPECT_EQ(l3["questions"], 3 * n_samples);  // exactly 3 per sampled set

  const json& dd = manifest_at(9)["counts"];
  EXPECT_EQ(dd["input"], 600 + 3 * n_samples);
  EXPECT_EQ(dd["removed"], 10);  // the planted copy's questions
  EXPECT_EQ(dd["output"], dd["input"].get<int>() - 10);

  const json& dc = manifest_at(10)["counts"];
  EXPECT_EQ(dc["benchmarks"], 3);
  EXPECT_EQ(dc["removed"], 0);  // plain benchmarks share nothing
  EXPECT_EQ(dc["output"], dd["output"]);

  const json& ans = manifest_at(11)["counts"];
  EXPECT_EQ(ans["questions"], dc["output"]);
  EXPECT_EQ(ans["answers"], dc["output"]);
  EXPECT_EQ(ans["failures"], 0);
}

TEST(Pipeline, DedupRemovesExactlyThePlantedCopysQuestions) {
  std::vector<QuestionRecord> merged;
  for (const char* stage :
       {"gen-questions-l1", "gen-questions-l2", "gen-questions-l3"}) {
    auto qs = stage_questions(stage);
    merged.insert(merged.end(), qs.begin(), qs.end());
  }
  auto kept = stage_questions("dedup");
  ASSERT_EQ(kept.size(), merged.size() - 10);

  std::set<std::string> kept_qids, merged_qids;
  for (const auto& q : kept) kept_qids.insert(q.qid);
  for (const auto& q : merged) merged_qids.insert(q.qid);

  // exactly the copy's ten question ids are gone
  std::set<std::string> want_removed;
  for (std::size_t i = 0; i < 5; ++i) {
    want_removed.insert(make_qid(1, "m59", i));
    want_removed.insert(make_qid(2, "m59", i));
  }
  for (const std::string& qid : want_removed) {
    EXPECT_TRUE(merged_qids.count(qid)) << qid;
    EXPECT_FALSE(kept_qids.count(qid)) << qid;
  }
  ASSERT_EQ(kept_qids.size() + want_removed.size(), merged_qids.size());

  // oracle, part 1: every removed question has a surviving duplicate
  std::map<std::string, const QuestionRecord*> by_qid;
  for (const auto& q : merged) by_qid[q.qid] = &q;
  for (const std::string& qid : want_removed) {
    bool has_survivor = false, has_twin = false;
    for (const auto& s : kept) {
      if (pair_jaccard(*by_qid.at(qid), s) >= 0.8) has_survivor = true;
      // the planted pairs are byte-identical after normalization
      if (normalize_text(s.text) == normalize_text(by_qid.at(qid)->text))
        has_twin = true;
    }
    EXPECT_TRUE(has_survivor) << qid;
    EXPECT_TRUE(has_twin) << qid;
  }

  // oracle, part 2: no surviving pair crosses the similarity threshold
  std::vector<std::set<std::string>> sh(kept.size());
  for (std::size_t i = 0; i < kept.size(); ++i)
    sh[i] = shingle_set(normalize_text(kept[i].text), 3);
  for (std::size_t i = 0; i < kept.size(); ++i)
    for (std::size_t j = i + 1; j < kept.size(); ++j)
      ASSERT_LT(jaccard(sh[i], sh[j]), 0.8)
          << kept[i].qid << " vs " << kept[j].qid;
}

TEST(Pipeline, DecontaminationRemovesExactlyThePlantedContaminants) {
  // pick five survivors across all three levels and quote their opening
  // words (which embed a per-question reference id) as benchmark items
  auto pool = stage_questions("decontaminate");
  std::vector<const QuestionRecord*> picked;
  int want_l1 = 2, want_l2 = 2, want_l3 = 1;
  for (const auto& q : pool) {
    int& want = q.gen_level == 1 ? want_l1 : (q.gen_level == 2 ? want_l2
                                                               : want_l3);
    if (want > 0) {
      picked.push_back(&q);
      --want;
    }
  }
  ASSERT_EQ(picked.size(), 5u);

  std::vector<json> bench_recs;
  std::vector<std::string> bench_texts;
  for (const QuestionRecord* q : picked) {
    std::vector<std::string> ws = words(normalize_text(q->text));
    ASSERT_GE(ws.size(), 9u);
    std::string span;
    for (std::size_t i = 0; i < 9; ++i) {
      if (i) span += " ";
      span += ws[i];
    }
    std::string item = "Assessment item: " + span + " ... complete this.";
    bench_recs.push_back({{"question", item}});
    bench_texts.push_back(item);
  }
  fs::path bench_path = fixture().root / "benchmarks_planted.jsonl";
  write_jsonl(bench_path.string(), bench_recs);

  // rerun the full chain against the planted benchmark file
  json cfg_json = fixture().config_json;
  cfg_json["paths"]["benchmarks"] = bench_path.string();
  cfg_json["paths"]["workdir"] = (fixture().root / "work-planted").string();
  PipelineConfig cfg = parse_config(cfg_json);
  fs::remove_all(cfg.workdir);
  std::vector<json> manifests = run_pipeline(cfg);

  const json& dc = manifests.at(10);
  ASSERT_EQ(dc["stage"], "decontaminate");
  EXPECT_EQ(dc["counts"]["benchmarks"], 5);
  EXPECT_EQ(dc["counts"]["removed"], 5);

  auto before = read_questions(
      (fs::path(cfg.workdir) / "dedup" / "questions.jsonl").string());
  auto after = read_questions(
      (fs::path(cfg.workdir) / "decontaminate" / "questions.jsonl").string());
  ASSERT_EQ(after.size(), before.size() - 5);

  std::set<std::string> after_qids, picked_qids;
  for (const auto& q : after) after_qids.insert(q.qid);
  for (const QuestionRecord* q : picked) picked_qids.insert(q->qid);
  for (const auto& qid : picked_qids)
    EXPECT_FALSE(after_qids.count(qid)) << qid;

  // brute-force n-gram oracle over the stage's input
  std::set<std::string> banned = banned_ngrams(bench_texts, 8);
  for (const auto& q : before) {
    bool dirty = hits_banned(q, banned, 8);
    EXPECT_EQ(dirty, picked_qids.count(q.qid) > 0) << q.qid;
    EXPECT_EQ(!dirty, after_qids.count(q.qid) > 0) << q.qid;
  }
}

TEST(Pipeline, AnswersCoverEveryFinalQuestionAndRecordTheModel) {
  auto final_qs = stage_questions("decontaminate");
  std::vector<QAPair> pairs;
  for_each_jsonl((fixture().work / "gen-answers" / "qa.jsonl").string(),
                 [&](std::size_t, const json& rec) {
                   pairs.push_back(qa_from_json(rec));
                 });
  ASSERT_EQ(pairs.size(), final_qs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    EXPECT_EQ(pairs[i].qid, final_qs[i].qid);
    EXPECT_EQ(pairs[i].question, final_qs[i].text);
    EXPECT_FALSE(pairs[i].answer.empty());
    EXPECT_EQ(pairs[i].answer_model, "mock-answerer");
  }
}

// -------------------------------------------------------- determinism

TEST(PipelineDeterminism, FullRerunIsByteIdentical) {
  const Baseline& b = baseline();
  fs::remove_all(fixture().work);
  run_pipeline(fixture_config());
  expect_snapshots_equal(snapshot_dir(fixture().work), b.snapshot);
}

TEST(PipelineDeterminism, StagewiseRunMatchesTheFullChain) {
  const Baseline& b = baseline();
  fs::remove_all(fixture().work);
  PipelineConfig cfg = fixture_config();

  run_filter_coldstart(cfg);
  run_filter_refine(cfg);  // defaults to the cold-start scores
  run_filter_refine(
      cfg, (fixture().work / "filter-refine-1" / "scores.jsonl").string());
  run_extract_concepts(cfg);
  run_build_graph(cfg);
  run_sample_concepts(cfg);
  run_gen_questions(cfg, 1);
  run_gen_questions(cfg, 2);
  run_gen_questions(cfg, 3);
  run_dedup(cfg);
  run_decontaminate(cfg);
  run_gen_answers(cfg);

  expect_snapshots_equal(snapshot_dir(fixture().work), b.snapshot);
}

TEST(PipelineDeterminism, SeedChangesGeneratedArtifacts) {
  json cfg_json = fixture().config_json;
  cfg_json["seed"] = 20240816;
  cfg_json["paths"]["workdir"] = (fixture().root / "work-reseeded").string();
  PipelineConfig cfg = parse_config(cfg_json);
  fs::remove_all(cfg.workdir);
  run_pipeline(cfg);

  auto other = [&](const char* stage) {
    return read_text_file(
        (fs::path(cfg.workdir) / stage / "questions.jsonl").string());
  };
  auto ours = [&](const char* stage) {
    return read_text_file(
        (fixture().work / stage / "questions.jsonl").string());
  };
  baseline();  // make sure the shared workdir is populated
  EXPECT_NE(other("gen-questions-l1"), ours("gen-questions-l1"));
  EXPECT_NE(
      read_text_file(
          (fs::path(cfg.workdir) / "sample-concepts" / "samples.jsonl")
              .string()),
      read_text_file(
          (fixture().work / "sample-concepts" / "samples.jsonl").string()));
}

// ---------------------------------------------------------------- CLI

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run_cli("").code, 2);
  EXPECT_EQ(run_cli("frobnicate").code, 2);
  CliResult no_points =
      run_cli("fit --config " + fixture().config_path.string());
  EXPECT_EQ(no_points.code, 2);
  CliResult no_cfg = run_cli("build-graph");
  EXPECT_EQ(no_cfg.code, 2);
}

TEST(Cli, MissingInputsAreNamedUsageErrors) {
  // a config whose corpus path does not exist
  json cfg_json = fixture().config_json;
  cfg_json["paths"]["corpus"] = (fixture().root / "nope.jsonl").string();
  cfg_json["paths"]["workdir"] = (fixture().root / "work-missing").string();
  fs::path p = fixture().root / "config_missing.json";
  write_text_file(p.string(), cfg_json.dump() + "\n");

  CliResult r = run_cli("filter-coldstart --config " + p.string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("nope.jsonl"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("usage error"), std::string::npos) << r.err;

  // an unconfigured benchmarks path is reported by name
  json cfg2 = fixture().config_json;
  cfg2["paths"].erase("benchmarks");
  cfg2["paths"]["workdir"] = (fixture().root / "work-missing2").string();
  fs::path p2 = fixture().root / "config_nobench.json";
  write_text_file(p2.string(), cfg2.dump() + "\n");
  fs::path qfile = fixture().root / "some_questions.jsonl";
  QuestionRecord q;
  q.qid = "q1";
  q.text = "any question?";
  q.gen_level = 1;
  q.origin_tag = "newly_created";
  q.school_level = "college";
  q.source_doc_ids = {"d"};
  write_jsonl(qfile.string(), {question_to_json(q)});
  CliResult r2 = run_cli("decontaminate --config " + p2.string() +
                         " --questions " + qfile.string());
  EXPECT_EQ(r2.code, 2);
  EXPECT_NE(r2.err.find("benchmarks"), std::string::npos) << r2.err;
}

TEST(Cli, FitSubcommandFitsThePublishedSeries) {
  fs::path work = fixture().root / "work-clifit";
  fs::remove_all(work);
  CliResult r = run_cli("fit --config " + fixture().config_path.string() +
                        " --out " + work.string() + " --points " +
                        data_csv("llama3b_errors.csv") + " --form rectified");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("fit:"), std::string::npos);

  json fj = json::parse(read_text_file((work / "fit" / "fit.json").string()));
  EXPECT_EQ(fj["form"], "rectified");
  EXPECT_EQ(fj["n_points"], 6);
  EXPECT_LT(fj["rmse_log"].get<double>(), 0.02);

  json m = json::parse(
      read_text_file((work / "fit" / "manifest.json").string()));
  EXPECT_EQ(m["stage"], "fit");
  EXPECT_EQ(m["counts"]["points"], 6);
  EXPECT_EQ(m["overrides"]["out"], work.string());
  EXPECT_EQ(m["inputs"]["points"]["path"], data_csv("llama3b_errors.csv"));

  CliResult bad_form =
      run_cli("fit --config " + fixture().config_path.string() + " --out " +
              work.string() + " --points " + data_csv("llama3b_errors.csv") +
              " --form cubic");
  EXPECT_EQ(bad_form.code, 2);
}

TEST(Cli, PredictAndInverseQueriesAgreeWithTheLibrary) {
  fs::path work = fixture().root / "work-clifit2";
  fs::remove_all(work);
  std::string common = " --config " + fixture().config_path.string() +
                       " --out " + work.string();
  ASSERT_EQ(run_cli("fit" + common + " --points " +
                    data_csv("llama8b_errors.csv") + " --form rectified")
                .code,
            0);

  CliResult pr = run_cli("predict" + common + " --tokens 3e11");
  ASSERT_EQ(pr.code, 0) << pr.err;
  json pj = json::parse(pr.out);
  EXPECT_DOUBLE_EQ(pj["tokens"].get<double>(), 3e11);

  RectifiedFit fit = fit_rectified(read_points(data_csv("llama8b_errors.csv")));
  EXPECT_NEAR(pj["error_rate"].get<double>(), predict(fit, 3e11), 1e-12);

  CliResult tf = run_cli("tokens-for-target" + common + " --target 0.2");
  ASSERT_EQ(tf.code, 0) << tf.err;
  json tj = json::parse(tf.out);
  EXPECT_NEAR(predict(fit, tj["tokens"].get<double>()), 0.2, 1e-9);

  // unreachable target is a stage error, not a usage error
  CliResult bad = run_cli("tokens-for-target" + common + " --target 0.01");
  EXPECT_EQ(bad.code, 1);
  EXPECT_NE(bad.err.find("unreachable"), std::string::npos) << bad.err;
}

TEST(Cli, SeedOverrideIsAppliedAndRecorded) {
  fs::path work = fixture().root / "work-cliseed";
  fs::remove_all(work);
  CliResult r = run_cli("fit --config " + fixture().config_path.string() +
                        " --out " + work.string() + " --seed 99 --points " +
                        data_csv("llama3b_errors.csv") + " --form marginal");
  ASSERT_EQ(r.code, 0) << r.err;
  json m = json::parse(
      read_text_file((work / "fit" / "manifest.json").string()));
  EXPECT_EQ(m["seed"], 99);
  EXPECT_EQ(m["overrides"]["seed"], 99);
  json fj = json::parse(read_text_file((work / "fit" / "fit.json").string()));
  EXPECT_EQ(fj["seed"], 99);
  EXPECT_EQ(fj["form"], "marginal");
}

TEST(Cli, DedupSubcommandDropsNearDuplicates) {
  auto rec = [](const char* qid, const std::string& text) {
    QuestionRecord q;
    q.qid = qid;
    q.text = text;
    q.gen_level = 1;
    q.origin_tag = "newly_created";
    q.school_level = "college";
    q.source_doc_ids = {"d"};
    return question_to_json(q);
  };
  fs::path qfile = fixture().root / "cli_dedup_in.jsonl";
  write_jsonl(qfile.string(),
              {rec("aaa",
                   "compute the derivative of the polynomial function "
                   "defined on the interval"),
               rec("zzz",
                   "compute the derivative of the polynomial function "
                   "defined on the domain"),
               rec("mmm", "a completely different question about parabolas")});

  fs::path work = fixture().root / "work-clidedup";
  fs::remove_all(work);
  CliResult r = run_cli("dedup --config " + fixture().config_path.string() +
                        " --out " + work.string() + " --in " +
                        qfile.string());
  ASSERT_EQ(r.code, 0) << r.err;

  auto kept = read_questions((work / "dedup" / "questions.jsonl").string());
  ASSERT_EQ(kept.size(), 2u);
  EXPECT_EQ(kept[0].qid, "aaa");  // near-duplicate pair keeps the lower qid
  EXPECT_EQ(kept[1].qid, "mmm");
  json m = json::parse(
      read_text_file((work / "dedup" / "manifest.json").string()));
  EXPECT_EQ(m["counts"]["input"], 3);
  EXPECT_EQ(m["counts"]["removed"], 1);
}

TEST(Cli, PipelineSubcommandReproducesTheLibraryRunByteForByte) {
  const Baseline& b = baseline();
  fs::remove_all(fixture().work);
  CliResult r =
      run_cli("pipeline --config " + fixture().config_path.string());
  ASSERT_EQ(r.code, 0) << r.err;

  // one status line per stage
  std::size_t lines = 0;
  for (char c : r.out) lines += (c == '\n');
  EXPECT_EQ(lines, 12u);
  EXPECT_NE(r.out.find("filter-coldstart:"), std::string::npos);
  EXPECT_NE(r.out.find("gen-answers:"), std::string::npos);

  expect_snapshots_equal(snapshot_dir(fixture().work), b.snapshot);
}
