#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "medverify/bootstrap.hpp"
#include "medverify/gateway.hpp"

namespace medv::pipeline {

// Model and endpoint for one role. Empty base_url / api_key_env fall back to [gateway].
struct RoleSettings {
  std::string model;
  double temperature = 0.0;
  std::string base_url;
  std::string api_key_env;
};

struct GatewaySettings {
  std::string base_url = "https://api.openai.com/v1";
  std::string api_key_env = "OPENAI_API_KEY";
  std::chrono::milliseconds timeout{60000};
  gateway::RetryPolicy retry;
  std::size_t parallelism = 4;
  std::optional<std::filesystem::path> mock_script;  // offline scripted backend
};

enum class EmbedMode { Fallback, Remote };

struct EmbeddingSettings {
  EmbedMode mode = EmbedMode::Fallback;
  std::uint32_t dim = 256;
  std::string model;
  std::string base_url;  // remote only; defaults to [gateway] base_url
  bool build_index = false;  // embed the article store when no embeddings file is given
};

struct AuditSettings {
  std::string style = "vancouver";
  std::string matcher_url = "https://eutils.ncbi.nlm.nih.gov/entrez/eutils";
  std::string idconv_url = "https://www.ncbi.nlm.nih.gov/pmc/utils";
  std::string citation_type = "citation";
  std::string pmid_key = "pmid";
  std::size_t sample = 50;
};

struct PipelineConfig {
  std::filesystem::path source;  // the config file, empty when built in code
  std::uint64_t seed = 0;
  std::size_t k = 10;
  std::filesystem::path workdir = "work";
  std::optional<std::filesystem::path> articles;
  std::optional<std::filesystem::path> embeddings;
  EmbeddingSettings embedding;
  bench::BootstrapSettings bootstrap;
  GatewaySettings gateway;
  std::map<std::string, RoleSettings> roles;  // claimgen, screener, extractor, filter, verifier
  std::vector<RoleSettings> panel;             // empty or exactly three members
  AuditSettings audit;
};

inline constexpr std::array<const char*, 5> kRoles = {"claimgen", "screener", "extractor", "filter", "verifier"};

// Parses an INI file:
//
//   [run]        seed, k, workdir
//   [paths]      articles, embeddings
//   [embedding]  mode (fallback|remote), dim, model, base_url, build_index
//   [bootstrap]  iterations, level
//   [gateway]    base_url, api_key_env, timeout_ms, max_attempts, base_delay_ms, parallelism, mock
//   [claimgen] [screener] [extractor] [filter] [verifier]
//                model, temperature, base_url, api_key_env
//   [panel]      models (three, comma separated), temperature, base_url, api_key_env
//   [audit]      style, matcher_url, idconv_url, citation_type, pmid_key, sample
//
// Relative paths resolve against the file's directory. Unknown sections or
// keys and out-of-range values raise Error(Config) naming "section.key".
PipelineConfig load_config(const std::filesystem::path& path);

// Checks invariants (k >= 1, panel arity, bootstrap range, writable workdir).
void check_config(const PipelineConfig& config);

// load_config followed by check_config.
PipelineConfig validate_config(const std::filesystem::path& path);

// Reads the API key named by the role (or gateway) api_key_env; empty when unset.
std::string resolve_api_key(const PipelineConfig& config, const RoleSettings& role);

// Stable hex digest of the config file and any command-line overrides.
std::string config_hash(const PipelineConfig& config);

}  // namespace medv::pipeline
