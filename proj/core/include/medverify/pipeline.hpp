#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "medverify/config.hpp"
#include "medverify/gateway.hpp"
#include "medverify/json_io.hpp"

namespace medv::pipeline {

enum class Stage { GenerateClaims, Retrieve, Screen, Panel, Assemble, Stats };

inline constexpr std::array<Stage, 5> kSynthStages = {Stage::GenerateClaims, Stage::Retrieve, Stage::Screen,
                                                      Stage::Panel, Stage::Assemble};

std::string_view stage_name(Stage s) noexcept;
// Throws InvalidArgument for an unknown name.
Stage parse_stage(std::string_view name);

// Per-stage accounting; outputs + dropped + errors == inputs.
struct StageStats {
  std::string stage;
  std::size_t inputs = 0;
  std::size_t outputs = 0;
  std::size_t dropped = 0;
  std::size_t errors = 0;
  std::size_t records_written = 0;
  std::int64_t wall_ms = 0;
  bool skipped = false;                        // completed by an earlier run
  std::map<std::string, std::size_t> reasons;  // drop and error reasons

  bool balanced() const noexcept { return outputs + dropped + errors == inputs; }
};

json to_json(const StageStats& s);
StageStats stage_stats_from_json(const json& j);

struct RunManifest {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<StageStats> stages;
  std::size_t gateway_attempts = 0;
};

json to_json(const RunManifest& m);

// Stage file names inside the work directory.
inline constexpr std::string_view kClaimsFile = "claims.jsonl";
inline constexpr std::string_view kPairsFile = "pairs.jsonl";
inline constexpr std::string_view kVerdictsFile = "verdicts.jsonl";
inline constexpr std::string_view kPanelFile = "panel.jsonl";
inline constexpr std::string_view kInstancesFile = "instances.jsonl";
inline constexpr std::string_view kStatsFile = "stats.json";
inline constexpr std::string_view kManifestFile = "manifest.json";

class Pipeline {
 public:
  // Without a backend, requests go to the configured mock script or to the
  // HTTP endpoints of each role.
  explicit Pipeline(PipelineConfig config, std::shared_ptr<gateway::ChatBackend> backend = nullptr);

  // Runs the stages in order and writes manifest.json. A stage whose done
  // marker exists is skipped. Throws on the first failing stage.
  RunManifest run(std::span<const Stage> stages);

  // Runs one stage; `force` discards its done marker first.
  StageStats run_stage(Stage stage, bool force = false);

  const PipelineConfig& config() const noexcept { return config_; }
  std::filesystem::path file(std::string_view name) const { return config_.workdir / name; }

  // Throws Config("<role>.model") when the role is not configured.
  const RoleSettings& role(const std::string& name) const;
  const gateway::Gateway& gateway_for(const RoleSettings& role);

  // Backend attempts across every gateway this pipeline created.
  std::size_t gateway_attempts() const;

 private:
  StageStats generate_claims();
  StageStats retrieve();
  StageStats screen();
  StageStats panel();
  StageStats assemble();
  StageStats stats();

  std::filesystem::path marker(Stage s) const;
  std::filesystem::path checkpoint(Stage s) const;
  void require_file(const std::filesystem::path& p, Stage s) const;

  PipelineConfig config_;
  std::shared_ptr<gateway::ChatBackend> shared_backend_;
  std::map<std::string, std::unique_ptr<gateway::Gateway>> gateways_;
};

}  // namespace medv::pipeline
