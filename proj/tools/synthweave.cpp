// synthweave CLI: pipeline stages as composable subcommands over a JSON
// config.  Exit codes: 0 success, 1 pipeline/stage error, 2 usage error.

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "synthweave/pipeline.hpp"

namespace {

void print_stage(const synthweave::json& manifest) {
  std::cout << manifest["stage"].get<std::string>() << ": "
            << manifest["counts"].dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "synthweave: corpus filtering, concept-graph question generation, "
      "and scaling-law fitting"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed_override = 0;
  std::string out_override;
  std::string scores_path, concepts_path, samples_path, graph_path;
  std::string questions_path, points_path, fit_path, form;
  std::vector<std::string> dedup_inputs;
  int level = 0;
  double tokens = 0.0, target = 0.0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "pipeline config JSON")
        ->required();
    sub->add_option("--seed", seed_override, "override the config seed");
    sub->add_option("--out", out_override, "override the config workdir");
  };

  CLI::App* coldstart = app.add_subcommand(
      "filter-coldstart", "train the cold-start binary filter");
  add_common(coldstart);

  CLI::App* refine = app.add_subcommand(
      "filter-refine", "run one judge-driven refinement iteration");
  add_common(refine);
  refine->add_option("--scores", scores_path,
                     "previous iteration's scores.jsonl");

  CLI::App* extract = app.add_subcommand(
      "extract-concepts", "extract concept sets from retained documents");
  add_common(extract);
  extract->add_option("--scores", scores_path, "retained-set scores.jsonl");

  CLI::App* buildg =
      app.add_subcommand("build-graph", "build the concept co-occurrence graph");
  add_common(buildg);
  buildg->add_option("--concepts", concepts_path, "concepts.jsonl");

  CLI::App* sampleg = app.add_subcommand(
      "sample-concepts", "sample concept combinations by random walk");
  add_common(sampleg);
  sampleg->add_option("--graph", graph_path, "graph.json");

  CLI::App* genq =
      app.add_subcommand("gen-questions", "generate questions at one level");
  add_common(genq);
  genq->add_option("--level", level, "generation level (1, 2 or 3)")
      ->required();
  genq->add_option("--scores", scores_path, "retained-set scores.jsonl");
  genq->add_option("--concepts", concepts_path, "concepts.jsonl");
  genq->add_option("--samples", samples_path, "samples.jsonl");

  CLI::App* gena =
      app.add_subcommand("gen-answers", "generate answers for questions");
  add_common(gena);
  gena->add_option("--questions", questions_path, "questions.jsonl");

  CLI::App* dedup_cmd = app.add_subcommand(
      "dedup", "merge question files and drop near-duplicates");
  add_common(dedup_cmd);
  dedup_cmd->add_option("--in", dedup_inputs, "question JSONL inputs");

  CLI::App* decon = app.add_subcommand(
      "decontaminate", "drop questions overlapping benchmark items");
  add_common(decon);
  decon->add_option("--questions", questions_path, "questions.jsonl");

  CLI::App* fit_cmd =
      app.add_subcommand("fit", "fit a scaling law to observation points");
  add_common(fit_cmd);
  fit_cmd->add_option("--points", points_path, "points JSONL or CSV")
      ->required();
  fit_cmd->add_option("--form", form, "rectified, marginal or power")
      ->required();

  CLI::App* predict_cmd =
      app.add_subcommand("predict", "predict error rate at a token count");
  add_common(predict_cmd);
  predict_cmd->add_option("--fit", fit_path, "fit.json");
  predict_cmd->add_option("--tokens", tokens, "token count")->required();

  CLI::App* tft_cmd = app.add_subcommand(
      "tokens-for-target", "tokens needed to reach a target error rate");
  add_common(tft_cmd);
  tft_cmd->add_option("--fit", fit_path, "fit.json");
  tft_cmd->add_option("--target", target, "target error rate")->required();

  CLI::App* pipeline_cmd =
      app.add_subcommand("pipeline", "run the full stage chain");
  add_common(pipeline_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    using namespace synthweave;
    json raw = json::parse(read_text_file(config_path), nullptr, false);
    if (raw.is_discarded())
      throw ArgumentError(config_path + ": invalid JSON config");
    json overrides = json::object();
    CLI::App* active = app.get_subcommands().front();
    if (active->count("--seed") > 0) {
      raw["seed"] = seed_override;
      overrides["seed"] = seed_override;
    }
    if (active->count("--out") > 0) {
      raw["paths"]["workdir"] = out_override;
      overrides["out"] = out_override;
    }
    PipelineConfig cfg;
    try {
      cfg = parse_config(raw);
    } catch (const Error& e) {
      throw ArgumentError(config_path + ": " + std::string(e.what()));
    }
    cfg.cli_overrides = overrides;

    if (app.got_subcommand(coldstart)) {
      print_stage(run_filter_coldstart(cfg));
    } else if (app.got_subcommand(refine)) {
      print_stage(run_filter_refine(cfg, scores_path));
    } else if (app.got_subcommand(extract)) {
      print_stage(run_extract_concepts(cfg, scores_path));
    } else if (app.got_subcommand(buildg)) {
      print_stage(run_build_graph(cfg, concepts_path));
    } else if (app.got_subcommand(sampleg)) {
      print_stage(run_sample_concepts(cfg, graph_path));
    } else if (app.got_subcommand(genq)) {
      print_stage(
          run_gen_questions(cfg, level, scores_path, concepts_path,
                            samples_path));
    } else if (app.got_subcommand(gena)) {
      print_stage(run_gen_answers(cfg, questions_path));
    } else if (app.got_subcommand(dedup_cmd)) {
      print_stage(run_dedup(cfg, dedup_inputs));
    } else if (app.got_subcommand(decon)) {
      print_stage(run_decontaminate(cfg, questions_path));
    } else if (app.got_subcommand(fit_cmd)) {
      print_stage(run_fit(cfg, points_path, form));
    } else if (app.got_subcommand(predict_cmd)) {
      json m = run_predict(cfg, fit_path, tokens);
      std::cout << m["result"].dump() << "\n";
    } else if (app.got_subcommand(tft_cmd)) {
      json m = run_tokens_for_target(cfg, fit_path, target);
      std::cout << m["result"].dump() << "\n";
    } else if (app.got_subcommand(pipeline_cmd)) {
      for (const json& m : run_pipeline(cfg)) print_stage(m);
    }
    return 0;
  } catch (const synthweave::ArgumentError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
