#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include "medverify/config.hpp"
#include "medverify/pipeline.hpp"
#include "test_support.hpp"

namespace medv::pipeline {
namespace {

using medv::testing::code_of;
using medv::testing::fixture;
using medv::testing::read_file;
using medv::testing::TempDir;
using medv::testing::write_file;

std::string config_subject(const std::filesystem::path& ini) {
  try {
    validate_config(ini);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Config);
    return e.subject();
  }
  return "<none>";
}

TEST(Config, MinimalDefaults) {
  TempDir dir;
  write_file(dir / "c.ini", "[claimgen]\nmodel = m\n");
  const PipelineConfig c = validate_config(dir / "c.ini");
  EXPECT_EQ(c.k, 10u);
  EXPECT_EQ(c.bootstrap.iterations, 2000u);
  EXPECT_EQ(c.bootstrap.level, 0.95);
  EXPECT_EQ(c.workdir, dir.path() / "work");
  EXPECT_TRUE(std::filesystem::is_directory(c.workdir));
  EXPECT_EQ(c.roles.at("claimgen").model, "m");
  EXPECT_TRUE(c.panel.empty());
}

TEST(Config, Violations) {
  TempDir dir;
  write_file(dir / "panel.ini", "[panel]\nmodels = a, b\n");
  EXPECT_EQ(config_subject(dir / "panel.ini"), "panel");
  write_file(dir / "k.ini", "[run]\nk = 0\n");
  EXPECT_EQ(config_subject(dir / "k.ini"), "k");
  write_file(dir / "key.ini", "[run]\ncolour = red\n");
  EXPECT_EQ(config_subject(dir / "key.ini"), "run.colour");
  write_file(dir / "sec.ini", "[misc]\nx = 1\n");
  EXPECT_EQ(config_subject(dir / "sec.ini"), "misc");
  write_file(dir / "level.ini", "[bootstrap]\nlevel = 1.5\n");
  EXPECT_NE(config_subject(dir / "level.ini").find("level"), std::string::npos);
  EXPECT_EQ(code_of([&] { validate_config(dir / "absent.ini"); }), ErrorCode::Config);
}

TEST(Config, RelativePathsAndHash) {
  const PipelineConfig c = load_config(fixture("synth/pipeline.ini"));
  EXPECT_EQ(c.articles, fixture("synth/articles.jsonl"));
  EXPECT_EQ(c.gateway.mock_script, fixture("synth/mock.json"));
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.bootstrap.seed, 7u);
  EXPECT_EQ(c.panel.size(), 3u);
  PipelineConfig other = c;
  other.seed = 8;
  EXPECT_NE(config_hash(c), config_hash(other));
  EXPECT_EQ(config_hash(c), config_hash(load_config(fixture("synth/pipeline.ini"))));
  EXPECT_EQ(config_hash(c).size(), 16u);
}

TEST(Stages, NamesRoundTrip) {
  for (Stage s : {Stage::GenerateClaims, Stage::Retrieve, Stage::Screen, Stage::Panel, Stage::Assemble, Stage::Stats}) {
    EXPECT_EQ(parse_stage(stage_name(s)), s);
  }
  EXPECT_EQ(code_of([] { parse_stage("train"); }), ErrorCode::InvalidArgument);
}

PipelineConfig fixture_config(const std::filesystem::path& workdir) {
  PipelineConfig c = load_config(fixture("synth/pipeline.ini"));
  c.workdir = workdir;
  std::filesystem::create_directories(workdir);
  return c;
}

std::size_t data_lines(const std::filesystem::path& p) { return read_data_lines(p).size(); }

const std::vector<Stage> kAll{Stage::GenerateClaims, Stage::Retrieve, Stage::Screen,
                              Stage::Panel,          Stage::Assemble, Stage::Stats};

TEST(Pipeline, FullRunConservesCounts) {
  TempDir dir;
  Pipeline p(fixture_config(dir.path()));
  const RunManifest m = p.run(kAll);
  ASSERT_EQ(m.stages.size(), kAll.size());
  for (const auto& s : m.stages) {
    EXPECT_TRUE(s.balanced()) << s.stage;
    EXPECT_FALSE(s.skipped);
  }
  const auto& gen = m.stages[0];
  const auto& ret = m.stages[1];
  const auto& scr = m.stages[2];
  const auto& pan = m.stages[3];
  const auto& asm_ = m.stages[4];
  EXPECT_EQ(gen.inputs, 2 * 10u);
  EXPECT_EQ(data_lines(dir / "claims.jsonl"), gen.outputs);
  EXPECT_EQ(ret.inputs, gen.outputs);
  EXPECT_EQ(ret.outputs, ret.inputs);
  EXPECT_EQ(data_lines(dir / "pairs.jsonl"), ret.outputs * 4);
  EXPECT_EQ(scr.inputs, data_lines(dir / "pairs.jsonl"));
  EXPECT_EQ(data_lines(dir / "verdicts.jsonl"), scr.outputs + scr.reasons.at("unscorable"));
  EXPECT_LE(pan.inputs, scr.outputs);
  EXPECT_EQ(data_lines(dir / "panel.jsonl"), pan.outputs + pan.errors);
  EXPECT_EQ(asm_.inputs, scr.outputs);
  EXPECT_EQ(data_lines(dir / "instances.jsonl"), asm_.outputs);
  EXPECT_GT(asm_.outputs, 0u);
  EXPECT_TRUE(std::filesystem::exists(dir / "stats.json"));
  EXPECT_TRUE(std::filesystem::exists(dir / "manifest.json"));
  EXPECT_FALSE(std::filesystem::exists(dir / "checkpoints" / "screen.ckpt"));
  EXPECT_GT(m.gateway_attempts, 0u);
}

TEST(Pipeline, RerunMakesNoCalls) {
  TempDir dir;
  Pipeline(fixture_config(dir.path())).run(kAll);
  const std::string before = read_file(dir / "instances.jsonl");
  Pipeline again(fixture_config(dir.path()));
  const RunManifest m = again.run(kAll);
  EXPECT_EQ(m.gateway_attempts, 0u);
  for (const auto& s : m.stages) EXPECT_TRUE(s.skipped) << s.stage;
  EXPECT_EQ(read_file(dir / "instances.jsonl"), before);
}

TEST(Pipeline, ByteIdenticalAcrossWorkdirs) {
  TempDir a, b;
  Pipeline(fixture_config(a.path())).run(kAll);
  Pipeline(fixture_config(b.path())).run(kAll);
  for (const char* f : {"claims.jsonl", "pairs.jsonl", "verdicts.jsonl", "panel.jsonl", "instances.jsonl", "stats.json"}) {
    EXPECT_EQ(read_file(a / f), read_file(b / f)) << f;
  }
}

TEST(Pipeline, MissingEmbeddingsNamesStage) {
  TempDir dir;
  PipelineConfig c = fixture_config(dir.path());
  c.embedding.build_index = false;
  c.embeddings = dir / "absent.mfei";
  Pipeline p(c);
  p.run_stage(Stage::GenerateClaims);
  try {
    p.run_stage(Stage::Retrieve);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::StageInputMissing);
    EXPECT_EQ(e.subject(), "retrieve");
  }
  c.embeddings.reset();
  Pipeline q(c);
  EXPECT_EQ(code_of([&] { q.run_stage(Stage::Retrieve); }), ErrorCode::StageInputMissing);
}

TEST(Pipeline, StageWithoutInputs) {
  TempDir dir;
  Pipeline p(fixture_config(dir.path()));
  EXPECT_EQ(code_of([&] { p.run_stage(Stage::Screen); }), ErrorCode::StageInputMissing);
}

TEST(Pipeline, PanelNeedsThreeMembers) {
  TempDir dir;
  PipelineConfig c = fixture_config(dir.path());
  c.panel.pop_back();
  Pipeline p(c);
  for (Stage s : {Stage::GenerateClaims, Stage::Retrieve, Stage::Screen}) p.run_stage(s);
  EXPECT_EQ(code_of([&] { p.run_stage(Stage::Panel); }), ErrorCode::Config);
}

TEST(Pipeline, ForceRerunsStage) {
  TempDir dir;
  Pipeline p(fixture_config(dir.path()));
  p.run_stage(Stage::GenerateClaims);
  const auto before = p.gateway_attempts();
  EXPECT_TRUE(p.run_stage(Stage::GenerateClaims).skipped);
  EXPECT_EQ(p.gateway_attempts(), before);
  EXPECT_FALSE(p.run_stage(Stage::GenerateClaims, true).skipped);
  EXPECT_GT(p.gateway_attempts(), before);
}

// Forwards to the fixture mock and ends the process abruptly after `limit` calls.
class DyingBackend final : public gateway::ChatBackend {
 public:
  DyingBackend(std::shared_ptr<gateway::MockChatBackend> inner, std::size_t limit)
      : inner_(std::move(inner)), limit_(limit) {}
  std::string send(const gateway::ChatRequest& req) override {
    if (++calls_ > limit_) _exit(42);
    return inner_->send(req);
  }

 private:
  std::shared_ptr<gateway::MockChatBackend> inner_;
  std::size_t limit_;
  std::atomic<std::size_t> calls_{0};
};

TEST(Pipeline, KilledStageResumesFromCheckpoint) {
  TempDir ref, dir;
  Pipeline(fixture_config(ref.path())).run(kAll);

  const PipelineConfig c = fixture_config(dir.path());
  {
    Pipeline p(c);
    p.run_stage(Stage::GenerateClaims);
    p.run_stage(Stage::Retrieve);
  }
  const auto mock = gateway::MockChatBackend::from_file(fixture("synth/mock.json"));
  const pid_t pid = fork();
  ASSERT_GE(pid, 0);
  if (pid == 0) {
    Pipeline p(c, std::make_shared<DyingBackend>(mock, 30));
    p.run_stage(Stage::Screen);
    _exit(0);
  }
  int status = 0;
  waitpid(pid, &status, 0);
  ASSERT_TRUE(WIFEXITED(status));
  ASSERT_EQ(WEXITSTATUS(status), 42);
  ASSERT_FALSE(std::filesystem::exists(dir / "verdicts.jsonl"));
  const auto ckpt = dir / "checkpoints" / "screen.ckpt";
  ASSERT_TRUE(std::filesystem::exists(ckpt));
  std::size_t saved = 0;
  for (const auto& line : read_data_lines(ckpt)) saved += json::accept(line) ? 1 : 0;
  EXPECT_GT(saved, 0u);
  EXPECT_LE(saved, 30u);

  auto counting = gateway::MockChatBackend::from_file(fixture("synth/mock.json"));
  Pipeline resumed(c, counting);
  const StageStats s = resumed.run_stage(Stage::Screen);
  EXPECT_EQ(counting->calls(), s.inputs - saved);
  resumed.run(kAll);
  for (const char* f : {"verdicts.jsonl", "panel.jsonl", "instances.jsonl"}) {
    EXPECT_EQ(read_file(dir / f), read_file(ref / f)) << f;
  }
}

}  // namespace
}  // namespace medv::pipeline
