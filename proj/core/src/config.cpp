#include "medverify/config.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "medverify/error.hpp"
#include "medverify/hash.hpp"
#include "medverify/verdict.hpp"

namespace medv::pipeline {

namespace {

using Section = std::map<std::string, std::string>;

[[noreturn]] void config_error(const std::string& field, const std::string& message) {
  throw Error(ErrorCode::Config, message, field);
}

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::set<std::string> role{"model", "temperature", "base_url", "api_key_env"};
  static const std::map<std::string, std::set<std::string>> keys{
      {"run", {"seed", "k", "workdir"}},
      {"paths", {"articles", "embeddings"}},
      {"embedding", {"mode", "dim", "model", "base_url", "build_index"}},
      {"bootstrap", {"iterations", "level"}},
      {"gateway", {"base_url", "api_key_env", "timeout_ms", "max_attempts", "base_delay_ms", "parallelism", "mock"}},
      {"claimgen", role},
      {"screener", role},
      {"extractor", role},
      {"filter", role},
      {"verifier", role},
      {"panel", {"models", "temperature", "base_url", "api_key_env"}},
      {"audit", {"style", "matcher_url", "idconv_url", "citation_type", "pmid_key", "sample"}},
  };
  return keys;
}

class Reader {
 public:
  Reader(std::map<std::string, Section> sections, std::filesystem::path base)
      : sections_(std::move(sections)), base_(std::move(base)) {}

  const std::string* raw(const std::string& section, const std::string& key) const {
    auto s = sections_.find(section);
    if (s == sections_.end()) return nullptr;
    auto k = s->second.find(key);
    return k == s->second.end() ? nullptr : &k->second;
  }

  bool has_section(const std::string& section) const { return sections_.count(section) > 0; }

  void text(const std::string& section, const std::string& key, std::string& out) const {
    if (const auto* v = raw(section, key)) out = *v;
  }

  template <typename Int>
  void integer(const std::string& section, const std::string& key, Int& out, long long min_value) const {
    const auto* v = raw(section, key);
    if (v == nullptr) return;
    long long parsed = 0;
    const auto [p, ec] = std::from_chars(v->data(), v->data() + v->size(), parsed);
    if (v->empty() || ec != std::errc() || p != v->data() + v->size()) {
      config_error(section + "." + key, "expected an integer, got '" + *v + "'");
    }
    if (parsed < min_value) {
      config_error(section + "." + key, "must be at least " + std::to_string(min_value));
    }
    out = static_cast<Int>(parsed);
  }

  void real(const std::string& section, const std::string& key, double& out) const {
    const auto* v = raw(section, key);
    if (v == nullptr) return;
    try {
      std::size_t used = 0;
      out = std::stod(*v, &used);
      if (used != v->size()) throw std::invalid_argument("trailing text");
    } catch (const std::exception&) {
      config_error(section + "." + key, "expected a number, got '" + *v + "'");
    }
  }

  void boolean(const std::string& section, const std::string& key, bool& out) const {
    const auto* v = raw(section, key);
    if (v == nullptr) return;
    if (*v == "true" || *v == "yes" || *v == "1") out = true;
    else if (*v == "false" || *v == "no" || *v == "0") out = false;
    else config_error(section + "." + key, "expected true or false, got '" + *v + "'");
  }

  std::optional<std::filesystem::path> path(const std::string& section, const std::string& key) const {
    const auto* v = raw(section, key);
    if (v == nullptr || v->empty()) return std::nullopt;
    std::filesystem::path p(*v);
    return p.is_absolute() ? p : base_ / p;
  }

  RoleSettings role(const std::string& section) const {
    RoleSettings r;
    text(section, "model", r.model);
    real(section, "temperature", r.temperature);
    if (r.temperature < 0.0) config_error(section + ".temperature", "must be non-negative");
    text(section, "base_url", r.base_url);
    text(section, "api_key_env", r.api_key_env);
    return r;
  }

 private:
  std::map<std::string, Section> sections_;
  std::filesystem::path base_;
};

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

PipelineConfig load_config(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) config_error(path.string(), "config file not found");

  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    config_error(path.string() + ":" + std::to_string(e.line()), e.message());
  }

  std::map<std::string, Section> sections;
  for (const auto& [name, body] : tree) {
    if (body.empty()) config_error(name, "keys must appear inside a section");
    const auto known = known_keys().find(name);
    if (known == known_keys().end()) config_error(name, "unknown section");
    for (const auto& [key, value] : body) {
      if (!known->second.count(key)) config_error(name + "." + key, "unknown key");
      sections[name][key] = std::string(trim(value.data()));
    }
  }

  const Reader r(std::move(sections), std::filesystem::absolute(path).parent_path());
  PipelineConfig c;
  c.source = path;
  r.integer("run", "seed", c.seed, 0);
  r.integer("run", "k", c.k, 0);
  if (auto w = r.path("run", "workdir")) c.workdir = *w;
  else c.workdir = std::filesystem::absolute(path).parent_path() / "work";
  c.articles = r.path("paths", "articles");
  c.embeddings = r.path("paths", "embeddings");

  std::string mode = "fallback";
  r.text("embedding", "mode", mode);
  if (mode == "fallback") c.embedding.mode = EmbedMode::Fallback;
  else if (mode == "remote") c.embedding.mode = EmbedMode::Remote;
  else config_error("embedding.mode", "expected fallback or remote, got '" + mode + "'");
  r.integer("embedding", "dim", c.embedding.dim, 1);
  r.text("embedding", "model", c.embedding.model);
  r.text("embedding", "base_url", c.embedding.base_url);
  r.boolean("embedding", "build_index", c.embedding.build_index);
  if (c.embedding.mode == EmbedMode::Remote && c.embedding.model.empty()) {
    config_error("embedding.model", "remote embedding needs a model");
  }

  r.integer("bootstrap", "iterations", c.bootstrap.iterations, 0);
  r.real("bootstrap", "level", c.bootstrap.level);
  c.bootstrap.seed = c.seed;

  r.text("gateway", "base_url", c.gateway.base_url);
  r.text("gateway", "api_key_env", c.gateway.api_key_env);
  long long timeout_ms = c.gateway.timeout.count();
  r.integer("gateway", "timeout_ms", timeout_ms, 1);
  c.gateway.timeout = std::chrono::milliseconds(timeout_ms);
  r.integer("gateway", "max_attempts", c.gateway.retry.max_attempts, 1);
  long long base_delay = c.gateway.retry.base_delay.count();
  r.integer("gateway", "base_delay_ms", base_delay, 0);
  c.gateway.retry.base_delay = std::chrono::milliseconds(base_delay);
  r.integer("gateway", "parallelism", c.gateway.parallelism, 1);
  c.gateway.mock_script = r.path("gateway", "mock");

  for (const char* role : kRoles) {
    if (r.has_section(role)) c.roles[role] = r.role(role);
  }

  if (r.has_section("panel")) {
    const RoleSettings shared = r.role("panel");
    std::string models;
    r.text("panel", "models", models);
    std::stringstream ss(models);
    for (std::string item; std::getline(ss, item, ',');) {
      const std::string_view name = trim(item);
      if (name.empty()) config_error("panel", "empty panel member");
      RoleSettings m = shared;
      m.model = std::string(name);
      c.panel.push_back(std::move(m));
    }
  }

  r.text("audit", "style", c.audit.style);
  r.text("audit", "matcher_url", c.audit.matcher_url);
  r.text("audit", "idconv_url", c.audit.idconv_url);
  r.text("audit", "citation_type", c.audit.citation_type);
  r.text("audit", "pmid_key", c.audit.pmid_key);
  r.integer("audit", "sample", c.audit.sample, 0);
  return c;
}

void check_config(const PipelineConfig& c) {
  if (c.k < 1) config_error("k", "retrieval depth must be at least 1");
  if (!c.panel.empty() && c.panel.size() != 3) {
    config_error("panel", "panel needs exactly 3 members, got " + std::to_string(c.panel.size()));
  }
  if (c.bootstrap.iterations < 1) config_error("bootstrap.iterations", "must be at least 1");
  if (!(c.bootstrap.level > 0.0 && c.bootstrap.level < 1.0)) config_error("bootstrap.level", "must lie in (0, 1)");
  for (const auto& [name, role] : c.roles) {
    if (role.model.empty()) config_error(name + ".model", "role has no model");
  }

  std::error_code ec;
  std::filesystem::create_directories(c.workdir, ec);
  if (ec) config_error("run.workdir", "cannot create " + c.workdir.string() + ": " + ec.message());
  const auto probe = c.workdir / ".write-probe";
  {
    std::ofstream out(probe);
    if (!out) config_error("run.workdir", "not writable: " + c.workdir.string());
  }
  std::filesystem::remove(probe, ec);
}

PipelineConfig validate_config(const std::filesystem::path& path) {
  PipelineConfig c = load_config(path);
  check_config(c);
  return c;
}

std::string resolve_api_key(const PipelineConfig& config, const RoleSettings& role) {
  const std::string& name = role.api_key_env.empty() ? config.gateway.api_key_env : role.api_key_env;
  if (name.empty()) return {};
  const char* v = std::getenv(name.c_str());
  return v == nullptr ? std::string() : std::string(v);
}

std::string config_hash(const PipelineConfig& config) {
  const std::string file = config.source.empty() ? std::string() : read_text(config.source);
  const std::string mock = config.gateway.mock_script ? read_text(*config.gateway.mock_script) : std::string();
  const std::uint64_t h = hash_fields(file, std::to_string(config.seed), std::to_string(config.k), mock);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace medv::pipeline
