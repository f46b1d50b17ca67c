#include "medverify/pipeline.hpp"

#include <chrono>
#include <unordered_map>
#include <unordered_set>

#include "medverify/corpus.hpp"
#include "medverify/error.hpp"
#include "medverify/hash.hpp"
#include "medverify/parallel.hpp"
#include "medverify/prompts.hpp"
#include "medverify/synthgen.hpp"

namespace medv::pipeline {

std::string_view stage_name(Stage s) noexcept {
  switch (s) {
    case Stage::GenerateClaims: return "generate-claims";
    case Stage::Retrieve: return "retrieve";
    case Stage::Screen: return "screen";
    case Stage::Panel: return "panel";
    case Stage::Assemble: return "assemble";
    case Stage::Stats: return "stats";
  }
  return "stats";
}

Stage parse_stage(std::string_view name) {
  for (Stage s : {Stage::GenerateClaims, Stage::Retrieve, Stage::Screen, Stage::Panel, Stage::Assemble, Stage::Stats}) {
    if (name == stage_name(s)) return s;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown stage '" + std::string(name) + "'", "stages");
}

json to_json(const StageStats& s) {
  return json{{"stage", s.stage},     {"inputs", s.inputs},   {"outputs", s.outputs},
              {"dropped", s.dropped}, {"errors", s.errors},   {"records_written", s.records_written},
              {"wall_ms", s.wall_ms}, {"skipped", s.skipped}, {"reasons", s.reasons}};
}

StageStats stage_stats_from_json(const json& j) {
  StageStats s;
  s.stage = require_string(j, "stage");
  s.inputs = static_cast<std::size_t>(require_int(j, "inputs"));
  s.outputs = static_cast<std::size_t>(require_int(j, "outputs"));
  s.dropped = static_cast<std::size_t>(require_int(j, "dropped"));
  s.errors = static_cast<std::size_t>(require_int(j, "errors"));
  s.records_written = static_cast<std::size_t>(require_int(j, "records_written"));
  s.wall_ms = require_int(j, "wall_ms");
  if (j.contains("reasons")) s.reasons = j["reasons"].get<std::map<std::string, std::size_t>>();
  return s;
}

json to_json(const RunManifest& m) {
  json stages = json::array();
  for (const auto& s : m.stages) stages.push_back(to_json(s));
  return json{{"config_hash", m.config_hash},
              {"seed", m.seed},
              {"stages", std::move(stages)},
              {"gateway_attempts", m.gateway_attempts}};
}

namespace {

constexpr int kVersion = 1;

JsonlHeader header(std::string_view schema) { return JsonlHeader{std::string(schema), kVersion}; }

std::string pair_key(std::string_view claim_id, Pmid pmid) { return std::string(claim_id) + "|" + std::to_string(pmid); }

json verdict_json(const synth::Verdict& v) {
  if (const auto* r = std::get_if<VerificationReport>(&v)) {
    return json{{"status", "scored"}, {"score", r->score.value()}, {"rationale", r->rationale}};
  }
  return json{{"status", "unscorable"}, {"reason", std::get<synth::Unscorable>(v).reason}};
}

synth::Verdict verdict_from_json(const json& j) {
  const std::string status = require_string(j, "status");
  if (status == "scored") return VerificationReport{require_string(j, "rationale"), score_from_json(require(j, "score"))};
  if (status == "unscorable") return synth::Unscorable{require_string(j, "reason")};
  throw Error(ErrorCode::Schema, "unexpected verdict status '" + status + "'", "status");
}

corpus::ArticleStore load_store(const PipelineConfig& c, Stage s) {
  if (!c.articles) throw Error(ErrorCode::StageInputMissing, "no articles file configured", std::string(stage_name(s)));
  std::error_code ec;
  if (!std::filesystem::is_regular_file(*c.articles, ec)) {
    throw Error(ErrorCode::StageInputMissing, "articles file not found: " + c.articles->string(),
                std::string(stage_name(s)));
  }
  return corpus::load_articles(*c.articles).store;
}

std::unordered_map<std::string, Claim> load_claims(const std::filesystem::path& path) {
  std::unordered_map<std::string, Claim> out;
  for (const json& rec : read_jsonl(path, "claims").records) {
    Claim c = rec.get<Claim>();
    out.emplace(c.id, std::move(c));
  }
  return out;
}

struct ScoredPair {
  std::string claim_id;
  Pmid pmid = 0;
  bool is_source_article = false;
  std::string model;
  VerificationReport report;
};

// Scored screener verdicts in file order, plus the set of controversial claims.
struct ScreenView {
  std::vector<ScoredPair> scored;
  std::unordered_set<std::string> controversial;
};

ScreenView read_screen(const std::filesystem::path& path) {
  ScreenView view;
  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<LikertScore>> by_claim;
  for (const json& rec : read_jsonl(path, "verdicts").records) {
    const synth::Verdict v = verdict_from_json(rec);
    const auto* report = std::get_if<VerificationReport>(&v);
    if (report == nullptr) continue;
    ScoredPair p{require_string(rec, "claim_id"), require_int(rec, "pmid"),
                 require(rec, "is_source_article").get<bool>(), require_string(rec, "model"), *report};
    auto [it, fresh] = by_claim.try_emplace(p.claim_id);
    if (fresh) order.push_back(p.claim_id);
    it->second.push_back(p.report.score);
    view.scored.push_back(std::move(p));
  }
  for (const auto& id : order) {
    if (synth::screen_controversial(by_claim[id])) view.controversial.insert(id);
  }
  return view;
}

class StageTimer {
 public:
  StageTimer() : start_(std::chrono::steady_clock::now()) {}
  std::int64_t elapsed_ms() const {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace

Pipeline::Pipeline(PipelineConfig config, std::shared_ptr<gateway::ChatBackend> backend)
    : config_(std::move(config)), shared_backend_(std::move(backend)) {
  if (!shared_backend_ && config_.gateway.mock_script) {
    shared_backend_ = gateway::MockChatBackend::from_file(*config_.gateway.mock_script);
  }
}

const RoleSettings& Pipeline::role(const std::string& name) const {
  auto it = config_.roles.find(name);
  if (it == config_.roles.end() || it->second.model.empty()) {
    throw Error(ErrorCode::Config, "role '" + name + "' is not configured", name + ".model");
  }
  return it->second;
}

const gateway::Gateway& Pipeline::gateway_for(const RoleSettings& role) {
  const std::string base = role.base_url.empty() ? config_.gateway.base_url : role.base_url;
  const std::string key_env = role.api_key_env.empty() ? config_.gateway.api_key_env : role.api_key_env;
  const std::string id = shared_backend_ ? std::string("shared") : base + "|" + key_env;
  auto& slot = gateways_[id];
  if (!slot) {
    std::shared_ptr<gateway::ChatBackend> backend = shared_backend_;
    if (!backend) {
      backend = std::make_shared<gateway::HttpChatBackend>(
          gateway::HttpSettings{base, resolve_api_key(config_, role), config_.gateway.timeout});
    }
    slot = std::make_unique<gateway::Gateway>(backend, config_.gateway.retry, config_.seed);
  }
  return *slot;
}

std::size_t Pipeline::gateway_attempts() const {
  std::size_t total = 0;
  for (const auto& [_, gw] : gateways_) total += gw->attempts();
  return total;
}

std::filesystem::path Pipeline::marker(Stage s) const {
  return config_.workdir / (std::string(stage_name(s)) + ".done");
}

std::filesystem::path Pipeline::checkpoint(Stage s) const {
  return config_.workdir / "checkpoints" / (std::string(stage_name(s)) + ".ckpt");
}

void Pipeline::require_file(const std::filesystem::path& p, Stage s) const {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(p, ec)) {
    throw Error(ErrorCode::StageInputMissing, "missing input " + p.filename().string(), std::string(stage_name(s)));
  }
}

RunManifest Pipeline::run(std::span<const Stage> stages) {
  RunManifest m;
  m.config_hash = config_hash(config_);
  m.seed = config_.seed;
  for (Stage s : stages) m.stages.push_back(run_stage(s));
  m.gateway_attempts = gateway_attempts();
  write_json_file(file(kManifestFile), to_json(m));
  return m;
}

StageStats Pipeline::run_stage(Stage stage, bool force) {
  std::filesystem::create_directories(config_.workdir);
  const auto done = marker(stage);
  std::error_code ec;
  if (force) std::filesystem::remove(done, ec);
  if (std::filesystem::is_regular_file(done, ec)) {
    StageStats s = stage_stats_from_json(read_json_file(done));
    s.skipped = true;
    return s;
  }

  const StageTimer timer;
  StageStats s;
  switch (stage) {
    case Stage::GenerateClaims: s = generate_claims(); break;
    case Stage::Retrieve: s = retrieve(); break;
    case Stage::Screen: s = screen(); break;
    case Stage::Panel: s = panel(); break;
    case Stage::Assemble: s = assemble(); break;
    case Stage::Stats: s = stats(); break;
  }
  s.stage = std::string(stage_name(stage));
  s.wall_ms = timer.elapsed_ms();
  write_json_file(done, to_json(s));
  std::filesystem::remove(checkpoint(stage), ec);
  return s;
}

// ---------------------------------------------------------------------------

StageStats Pipeline::generate_claims() {
  const corpus::ArticleStore store = load_store(config_, Stage::GenerateClaims);
  const RoleSettings& r = role("claimgen");
  const auto articles = store.sorted();

  std::vector<gateway::ChatRequest> reqs;
  std::vector<std::pair<const Article*, Polarity>> items;
  for (const Article* a : articles) {
    for (Polarity pol : {Polarity::SupportedBy, Polarity::RefutedBy}) {
      reqs.push_back(gateway::make_request(r.model, prompts::claim_generation(*a, pol), r.temperature));
      items.emplace_back(a, pol);
    }
  }
  std::filesystem::create_directories(checkpoint(Stage::GenerateClaims).parent_path());
  const auto results = gateway_for(r).complete_batch(reqs, config_.gateway.parallelism, checkpoint(Stage::GenerateClaims));

  StageStats s;
  s.inputs = reqs.size();
  JsonlWriter out(file(kClaimsFile), header("claims"));
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (const auto* err = std::get_if<gateway::BatchError>(&results[i])) {
      ++s.errors;
      ++s.reasons[std::string(to_string(err->code))];
      continue;
    }
    try {
      out.write(synth::make_claim(*items[i].first, items[i].second, std::get<gateway::ChatResponse>(results[i]).content));
      ++s.outputs;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::EmptyClaim) throw;
      ++s.dropped;
      ++s.reasons["empty-claim"];
    }
  }
  s.records_written = out.count();
  out.commit();
  return s;
}

StageStats Pipeline::retrieve() {
  require_file(file(kClaimsFile), Stage::Retrieve);
  const corpus::ArticleStore store = load_store(config_, Stage::Retrieve);

  std::unique_ptr<corpus::Embedder> embedder;
  if (config_.embedding.mode == EmbedMode::Remote) {
    const RoleSettings key_role{};
    embedder = std::make_unique<corpus::RemoteEmbedder>(
        gateway::HttpSettings{config_.embedding.base_url.empty() ? config_.gateway.base_url : config_.embedding.base_url,
                              resolve_api_key(config_, key_role), config_.gateway.timeout},
        config_.embedding.model, config_.embedding.dim);
  } else {
    embedder = std::make_unique<corpus::FallbackEmbedder>(config_.embedding.dim);
  }

  std::optional<corpus::EmbeddingIndex> index;
  std::error_code ec;
  if (config_.embeddings) {
    if (!std::filesystem::is_regular_file(*config_.embeddings, ec)) {
      throw Error(ErrorCode::StageInputMissing, "embeddings file not found: " + config_.embeddings->string(), "retrieve");
    }
    index = corpus::read_mfei(*config_.embeddings);
  } else if (config_.embedding.build_index) {
    index = corpus::build_index(store, *embedder);
  } else {
    throw Error(ErrorCode::StageInputMissing, "no embeddings file and embedding.build_index is off", "retrieve");
  }
  index->validate_against(store);

  std::vector<Claim> claims;
  for (const json& rec : read_jsonl(file(kClaimsFile), "claims").records) claims.push_back(rec.get<Claim>());

  struct Outcome {
    std::vector<corpus::Hit> hits;
    std::optional<ErrorCode> failure;
  };
  std::vector<Outcome> outcomes(claims.size());
  parallel_for(claims.size(), config_.gateway.parallelism, [&](std::size_t i) {
    try {
      outcomes[i].hits = corpus::top_k(*index, embedder->embed(claims[i].text), config_.k);
    } catch (const Error& e) {
      outcomes[i].failure = e.code();
    }
  });

  StageStats s;
  s.inputs = claims.size();
  JsonlWriter out(file(kPairsFile), header("pairs"));
  for (std::size_t i = 0; i < claims.size(); ++i) {
    const Outcome& o = outcomes[i];
    if (o.failure) {
      const bool blank = *o.failure == ErrorCode::EmptyText;
      ++(blank ? s.dropped : s.errors);
      ++s.reasons[blank ? "empty-text" : std::string(to_string(*o.failure))];
      continue;
    }
    if (o.hits.empty()) {
      ++s.dropped;
      ++s.reasons["no-hits"];
      continue;
    }
    for (std::size_t rank = 0; rank < o.hits.size(); ++rank) {
      out.write(json{{"claim_id", claims[i].id},
                     {"pmid", o.hits[rank].pmid},
                     {"rank", rank + 1},
                     {"cosine", o.hits[rank].cosine},
                     {"is_source_article", o.hits[rank].pmid == claims[i].source_pmid}});
    }
    ++s.outputs;
  }
  s.records_written = out.count();
  out.commit();
  return s;
}

StageStats Pipeline::screen() {
  require_file(file(kPairsFile), Stage::Screen);
  require_file(file(kClaimsFile), Stage::Screen);
  const corpus::ArticleStore store = load_store(config_, Stage::Screen);
  const auto claims = load_claims(file(kClaimsFile));
  const RoleSettings& r = role("screener");

  StageStats s;
  std::vector<json> pairs;
  std::vector<gateway::ChatRequest> reqs;
  for (json& rec : read_jsonl(file(kPairsFile), "pairs").records) {
    ++s.inputs;
    const std::string claim_id = require_string(rec, "claim_id");
    const auto claim = claims.find(claim_id);
    const Article* article = store.find(require_int(rec, "pmid"));
    if (claim == claims.end() || article == nullptr) {
      ++s.dropped;
      ++s.reasons[claim == claims.end() ? "unknown-claim" : "article-missing"];
      continue;
    }
    reqs.push_back(synth::verification_request(r.model, claim->second, *article));
    reqs.back().temperature = r.temperature;
    pairs.push_back(std::move(rec));
  }
  std::filesystem::create_directories(checkpoint(Stage::Screen).parent_path());
  const auto results = gateway_for(r).complete_batch(reqs, config_.gateway.parallelism, checkpoint(Stage::Screen));

  JsonlWriter out(file(kVerdictsFile), header("verdicts"));
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (const auto* err = std::get_if<gateway::BatchError>(&results[i])) {
      ++s.errors;
      ++s.reasons[std::string(to_string(err->code))];
      continue;
    }
    const synth::Verdict v = synth::read_verdict(std::get<gateway::ChatResponse>(results[i]).content);
    json rec = verdict_json(v);
    rec["claim_id"] = pairs[i]["claim_id"];
    rec["pmid"] = pairs[i]["pmid"];
    rec["is_source_article"] = pairs[i]["is_source_article"];
    rec["model"] = r.model;
    out.write(rec);
    if (std::holds_alternative<VerificationReport>(v)) {
      ++s.outputs;
    } else {
      ++s.dropped;
      ++s.reasons["unscorable"];
    }
  }
  s.records_written = out.count();
  out.commit();
  return s;
}

StageStats Pipeline::panel() {
  require_file(file(kVerdictsFile), Stage::Panel);
  require_file(file(kClaimsFile), Stage::Panel);
  if (config_.panel.size() != 3) {
    throw Error(ErrorCode::Config, "panel needs exactly 3 members, got " + std::to_string(config_.panel.size()), "panel");
  }
  const ScreenView view = read_screen(file(kVerdictsFile));
  const auto claims = load_claims(file(kClaimsFile));

  std::vector<const ScoredPair*> pending;
  for (const auto& p : view.scored) {
    if (view.controversial.count(p.claim_id)) pending.push_back(&p);
  }
  // The article store is only needed when something goes to the panel.
  std::optional<corpus::ArticleStore> store;
  if (!pending.empty()) store = load_store(config_, Stage::Panel);

  StageStats s;
  s.inputs = pending.size();
  std::vector<gateway::ChatRequest> reqs;
  std::vector<const ScoredPair*> sent;
  for (const ScoredPair* p : pending) {
    const auto claim = claims.find(p->claim_id);
    const Article* article = store->find(p->pmid);
    if (claim == claims.end() || article == nullptr) {
      ++s.dropped;
      ++s.reasons[claim == claims.end() ? "unknown-claim" : "article-missing"];
      continue;
    }
    for (const RoleSettings& member : config_.panel) {
      reqs.push_back(synth::verification_request(member.model, claim->second, *article));
      reqs.back().temperature = member.temperature;
    }
    sent.push_back(p);
  }
  std::filesystem::create_directories(checkpoint(Stage::Panel).parent_path());
  const auto results =
      gateway_for(config_.panel.front()).complete_batch(reqs, config_.gateway.parallelism, checkpoint(Stage::Panel));

  JsonlWriter out(file(kPanelFile), header("panel"));
  for (std::size_t i = 0; i < sent.size(); ++i) {
    json members = json::array();
    bool failed = false;
    for (std::size_t m = 0; m < 3; ++m) {
      const auto& res = results[i * 3 + m];
      json member;
      if (const auto* err = std::get_if<gateway::BatchError>(&res)) {
        failed = true;
        member = json{{"status", "error"}, {"reason", std::string(to_string(err->code))}};
      } else {
        member = verdict_json(synth::read_verdict(std::get<gateway::ChatResponse>(res).content));
      }
      member["model"] = config_.panel[m].model;
      members.push_back(std::move(member));
    }
    out.write(json{{"claim_id", sent[i]->claim_id},
                   {"pmid", sent[i]->pmid},
                   {"status", failed ? "error" : "ok"},
                   {"members", std::move(members)}});
    if (failed) {
      ++s.errors;
      ++s.reasons["gateway-error"];
    } else {
      ++s.outputs;
    }
  }
  s.records_written = out.count();
  out.commit();
  return s;
}

StageStats Pipeline::assemble() {
  require_file(file(kVerdictsFile), Stage::Assemble);
  require_file(file(kClaimsFile), Stage::Assemble);
  const ScreenView view = read_screen(file(kVerdictsFile));
  const auto claims = load_claims(file(kClaimsFile));

  std::unordered_map<std::string, json> panel;
  if (!view.controversial.empty()) {
    require_file(file(kPanelFile), Stage::Assemble);
    for (json& rec : read_jsonl(file(kPanelFile), "panel").records) {
      const std::string key = pair_key(require_string(rec, "claim_id"), require_int(rec, "pmid"));
      panel.emplace(key, std::move(rec));
    }
  }

  StageStats s;
  s.inputs = view.scored.size();
  JsonlWriter out(file(kInstancesFile), header("instances"));
  for (const ScoredPair& p : view.scored) {
    const auto claim = claims.find(p.claim_id);
    if (claim == claims.end()) {
      ++s.dropped;
      ++s.reasons["unknown-claim"];
      continue;
    }
    if (!view.controversial.count(p.claim_id)) {
      const synth::TrainingInstance inst{claim->second, p.pmid, p.report.rationale, p.report.score,
                                         p.is_source_article, p.model};
      json rec = inst;
      rec["route"] = "screen";
      out.write(rec);
      ++s.outputs;
      continue;
    }
    const auto it = panel.find(pair_key(p.claim_id, p.pmid));
    if (it == panel.end()) {
      ++s.dropped;
      ++s.reasons["not-paneled"];
      continue;
    }
    if (require_string(it->second, "status") != "ok") {
      ++s.errors;
      ++s.reasons["gateway-error"];
      continue;
    }
    const json& members = require(it->second, "members");
    if (!members.is_array() || members.size() != 3) throw Error(ErrorCode::Schema, "panel record needs 3 members", "members");
    std::array<synth::PanelVerdict, 3> verdicts{};
    for (std::size_t m = 0; m < 3; ++m) {
      verdicts[m] = synth::PanelVerdict{require_string(members[m], "model"), verdict_from_json(members[m])};
    }
    const std::uint64_t seed = config_.seed ^ hash_fields(p.claim_id, std::to_string(p.pmid));
    auto result = synth::assemble_instance(claim->second, p.pmid, verdicts, seed, p.is_source_article);
    if (const auto* inst = std::get_if<synth::TrainingInstance>(&result)) {
      json rec = *inst;
      rec["route"] = "panel";
      out.write(rec);
      ++s.outputs;
    } else {
      ++s.dropped;
      ++s.reasons[std::get<synth::Dropped>(result).reason];
    }
  }
  s.records_written = out.count();
  out.commit();
  return s;
}

StageStats Pipeline::stats() {
  require_file(file(kInstancesFile), Stage::Stats);
  std::vector<synth::TrainingInstance> instances;
  for (const json& rec : read_jsonl(file(kInstancesFile), "instances").records) {
    instances.push_back(synth::instance_from_json(rec));
  }
  write_json_file(file(kStatsFile), synth::to_json(synth::dataset_stats(instances)));
  StageStats s;
  s.inputs = s.outputs = instances.size();
  s.records_written = 1;
  return s;
}

}  // namespace medv::pipeline
