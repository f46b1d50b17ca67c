#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "medverify/bench.hpp"
#include "medverify/citeaudit.hpp"
#include "medverify/config.hpp"
#include "medverify/corpus.hpp"
#include "medverify/error.hpp"
#include "medverify/guideaudit.hpp"
#include "medverify/json_io.hpp"
#include "medverify/pipeline.hpp"
#include "medverify/reward.hpp"

namespace fs = std::filesystem;
using namespace medv;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitStage = 3;

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string workdir;
  std::string mock;
};

pipeline::PipelineConfig load(const Globals& g) {
  pipeline::PipelineConfig c = g.config.empty() ? pipeline::PipelineConfig{} : pipeline::load_config(g.config);
  if (g.seed) {
    c.seed = *g.seed;
    c.bootstrap.seed = *g.seed;
  }
  if (!g.workdir.empty()) c.workdir = g.workdir;
  if (!g.mock.empty()) c.gateway.mock_script = fs::path(g.mock);
  pipeline::check_config(c);
  return c;
}

void print(const json& j) { std::cout << j.dump(2) << "\n"; }

corpus::ArticleStore load_store(const pipeline::PipelineConfig& c, const std::string& override_path) {
  const std::optional<fs::path> path = override_path.empty() ? c.articles : std::optional<fs::path>(override_path);
  if (!path) throw Error(ErrorCode::Config, "no articles file (set paths.articles or --articles)", "paths.articles");
  return corpus::load_articles(*path).store;
}

void write_lines(const fs::path& path, std::string_view schema, const std::vector<json>& records) {
  JsonlWriter out(path, JsonlHeader{std::string(schema), 1});
  for (const auto& r : records) out.write(r);
  out.commit();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Biomedical claim verification toolkit"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "INI configuration file");
  app.add_option("--seed", g.seed, "Override run.seed");
  app.add_option("--workdir", g.workdir, "Override run.workdir");
  app.add_option("--mock", g.mock, "Scripted mock backend (JSON) instead of HTTP endpoints");

  bool force = false;
  std::vector<CLI::App*> stage_cmds;
  for (pipeline::Stage s : {pipeline::Stage::GenerateClaims, pipeline::Stage::Retrieve, pipeline::Stage::Screen,
                            pipeline::Stage::Panel, pipeline::Stage::Assemble, pipeline::Stage::Stats}) {
    auto* cmd = app.add_subcommand(std::string(pipeline::stage_name(s)), "Run the " +
                                                                             std::string(pipeline::stage_name(s)) +
                                                                             " stage");
    cmd->add_flag("--force", force, "Rerun even if the stage is marked done");
    stage_cmds.push_back(cmd);
  }

  auto* run_cmd = app.add_subcommand("run", "Run pipeline stages in order and write manifest.json");
  std::vector<std::string> stage_names;
  run_cmd->add_option("--stages", stage_names, "Stages to run (default: the synthetic-data stages)")->delimiter(',');

  auto* reward_cmd = app.add_subcommand("reward", "Score verifier outputs against gold scores");
  std::string pred, gold, out;
  reward_cmd->add_option("--pred", pred, "Prediction JSONL")->required();
  reward_cmd->add_option("--gold", gold, "Gold score JSONL")->required();
  reward_cmd->add_option("--out", out, "Summary JSON");

  auto* bench_cmd = app.add_subcommand("bench", "Benchmark conversion and evaluation");
  bench_cmd->require_subcommand(1);
  auto* convert_cmd = bench_cmd->add_subcommand("convert", "Convert an upstream dataset to benchmark instances");
  std::string dataset, input, corpus_path, articles_path, model;
  convert_cmd->add_option("--dataset", dataset)
      ->required()
      ->check(CLI::IsMember({"scifact", "healthver", "medaesqa", "pubmedqa", "bioasq"}));
  convert_cmd->add_option("--input", input, "Upstream claims / questions / answers file")->required();
  convert_cmd->add_option("--corpus", corpus_path, "Corpus JSONL (scifact, healthver)");
  convert_cmd->add_option("--articles", articles_path, "Article JSONL (medaesqa)");
  convert_cmd->add_option("--model", model, "Question-conversion model (pubmedqa, bioasq)");
  convert_cmd->add_option("--out", out, "Output instances JSONL")->required();

  auto* eval_cmd = bench_cmd->add_subcommand("eval", "Accuracy per dataset and macro average");
  std::size_t iterations = 0;
  double level = 0.95;
  eval_cmd->add_option("--pred", pred)->required();
  eval_cmd->add_option("--gold", gold, "Benchmark instances JSONL")->required();
  eval_cmd->add_option("--bootstrap", iterations, "Bootstrap iterations (0 disables)");
  eval_cmd->add_option("--level", level, "Confidence level");
  eval_cmd->add_option("--out", out, "Summary JSON");

  auto* cite_cmd = app.add_subcommand("audit-citations", "Extract, resolve and verify citations in answers");
  std::string answers, style, matcher_url, idconv_url, records_out;
  cite_cmd->add_option("--answers", answers, "Directory of *.txt answers")->required();
  cite_cmd->add_option("--style", style, "nlm, ama, vancouver, apa, mla, pmid or doi");
  cite_cmd->add_option("--matcher-url", matcher_url);
  cite_cmd->add_option("--idconv-url", idconv_url);
  cite_cmd->add_option("--articles", articles_path);
  cite_cmd->add_option("--out", out, "Metrics JSON")->required();
  cite_cmd->add_option("--records", records_out, "Per-claim records JSONL (default: next to --out)");

  auto* guide_cmd = app.add_subcommand("audit-guidelines", "Flag guideline statements contradicted by their citation");
  std::string bioc, summary_out, sample_out;
  std::optional<std::size_t> sample_n;
  guide_cmd->add_option("--bioc", bioc, "Directory of BioC JSON files")->required();
  guide_cmd->add_option("--articles", articles_path);
  guide_cmd->add_option("--out", out, "Flagged cases JSONL")->required();
  guide_cmd->add_option("--summary", summary_out, "Summary JSON")->required();
  guide_cmd->add_option("--sample", sample_n, "Cases per contradiction stratum");
  guide_cmd->add_option("--sample-out", sample_out, "Review sample JSONL (default: next to --out)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    for (auto* cmd : stage_cmds) {
      if (!cmd->parsed()) continue;
      pipeline::Pipeline p(load(g));
      const auto stats = p.run_stage(pipeline::parse_stage(cmd->get_name()), force);
      print(pipeline::to_json(stats));
      return 0;
    }

    if (run_cmd->parsed()) {
      pipeline::Pipeline p(load(g));
      std::vector<pipeline::Stage> stages;
      for (const auto& n : stage_names) stages.push_back(pipeline::parse_stage(n));
      if (stages.empty()) stages.assign(pipeline::kSynthStages.begin(), pipeline::kSynthStages.end());
      print(pipeline::to_json(p.run(stages)));
      return 0;
    }

    if (reward_cmd->parsed()) {
      const json summary = reward::to_json(reward::score_file(pred, gold));
      if (!out.empty()) write_json_file(out, summary);
      print(summary);
      return 0;
    }

    if (convert_cmd->parsed()) {
      bench::ConvertResult result;
      if (dataset == "scifact" || dataset == "healthver") {
        if (corpus_path.empty()) throw Error(ErrorCode::Config, "--corpus is required for " + dataset, "corpus");
        result = bench::convert_multivers(input, corpus_path, dataset);
      } else if (dataset == "medaesqa") {
        const auto c = load(g);
        result = bench::convert_medaesqa(input, load_store(c, articles_path));
      } else {
        if (model.empty()) throw Error(ErrorCode::Config, "--model is required for " + dataset, "model");
        const auto c = load(g);
        pipeline::Pipeline p(c);
        const auto& gw = p.gateway_for(pipeline::RoleSettings{.model = model, .temperature = 0.0, .base_url = {}, .api_key_env = {}});
        result = dataset == "pubmedqa" ? bench::convert_pubmedqa(input, gw, model, c.gateway.parallelism)
                                       : bench::convert_bioasq(input, gw, model, c.gateway.parallelism);
      }
      bench::write_instances(out, result.instances);
      print(json{{"dataset", dataset},
                 {"instances", result.instances.size()},
                 {"dropped", result.dropped},
                 {"notes", result.notes}});
      return 0;
    }

    if (eval_cmd->parsed()) {
      std::optional<bench::BootstrapSettings> bs;
      if (iterations > 0) bs = bench::BootstrapSettings{iterations, level, g.seed.value_or(0)};
      const json summary = bench::to_json(bench::evaluate(fs::path(pred), fs::path(gold), bs));
      if (!out.empty()) write_json_file(out, summary);
      print(summary);
      return 0;
    }

    if (cite_cmd->parsed()) {
      const auto c = load(g);
      pipeline::Pipeline p(c);
      const auto store = load_store(c, articles_path);
      const cite::Style hint = cite::parse_style(style.empty() ? c.audit.style : style);
      const auto timeout = c.gateway.timeout;
      const cite::HttpCitationMatcher matcher({matcher_url.empty() ? c.audit.matcher_url : matcher_url, "", timeout});
      const cite::HttpIdConverter idconv({idconv_url.empty() ? c.audit.idconv_url : idconv_url, "", timeout});
      const auto& extractor = p.role("extractor");
      const auto& verifier = p.role("verifier");
      const auto& gw = p.gateway_for(extractor);
      if (&p.gateway_for(verifier) != &gw) {
        throw Error(ErrorCode::Config, "extractor and verifier must share an endpoint", "verifier.base_url");
      }
      const cite::AuditServices services{&gw, extractor.model, verifier.model, &store, &matcher, &idconv,
                                         c.gateway.parallelism};
      const auto run = cite::audit_answers(cite::load_answers(answers), hint, services);
      std::vector<json> records;
      for (const auto& a : run.answers) {
        for (const auto& r : a.records) records.push_back(cite::to_json(r));
      }
      const fs::path rec_path = records_out.empty() ? fs::path(out).replace_filename("records.jsonl") : fs::path(records_out);
      write_lines(rec_path, "audit-records", records);
      json metrics = cite::to_json(cite::compute_metrics(run.answers, c.bootstrap));
      metrics["style"] = std::string(cite::to_string(hint));
      metrics["extraction_failures"] = run.extraction_failures;
      write_json_file(out, metrics);
      print(metrics);
      return 0;
    }

    if (guide_cmd->parsed()) {
      const auto c = load(g);
      pipeline::Pipeline p(c);
      const auto store = load_store(c, articles_path);
      const auto& filter = p.role("filter");
      const auto& verifier = p.role("verifier");
      const auto& gw = p.gateway_for(filter);
      if (&p.gateway_for(verifier) != &gw) {
        throw Error(ErrorCode::Config, "filter and verifier must share an endpoint", "verifier.base_url");
      }
      const guide::GuidelineServices services{&gw, filter.model, verifier.model, &store, c.gateway.parallelism};
      const auto run = guide::audit_guidelines(guide::load_bioc_dir(bioc),
                                               guide::BiocOptions{c.audit.citation_type, c.audit.pmid_key}, services);
      std::vector<json> flagged;
      for (const auto& f : run.flags.flagged) flagged.push_back(f);
      write_lines(out, "flagged", flagged);

      const auto sample = guide::stratified_sample(run.flags.flagged, sample_n.value_or(c.audit.sample), c.seed);
      std::vector<json> sampled;
      for (const auto& f : sample.cases) sampled.push_back(f);
      const fs::path sp = sample_out.empty() ? fs::path(out).replace_filename("sample.jsonl") : fs::path(sample_out);
      write_lines(sp, "flagged-sample", sampled);
      for (const auto& w : sample.warnings) std::cerr << "warning: " << w << "\n";

      json summary = guide::to_json(run);
      summary["sample"] = {{"cases", sample.cases.size()}, {"warnings", sample.warnings}};
      write_json_file(summary_out, summary);
      print(summary);
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    const bool config = e.code() == ErrorCode::Config || e.code() == ErrorCode::InvalidArgument;
    return config ? kExitConfig : kExitStage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitStage;
  }
  return 0;
}
