#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "medverify/gateway.hpp"
#include "medverify/json_io.hpp"
#include "medverify/types.hpp"

namespace medv::synth {

// Stable claim identifier: "<pmid>-s" for supported, "<pmid>-r" for refuted.
std::string claim_id(Pmid source_pmid, Polarity polarity);

// Builds a Claim from a model reply; throws EmptyClaim when the reply is blank.
Claim make_claim(const Article& source, Polarity polarity, std::string_view reply);

// Sends the claim-generation prompt for `polarity` and wraps the reply.
Claim generate_claim(const gateway::Gateway& gw, const std::string& model, const Article& article,
                     Polarity polarity);

// Verification result for one claim-article pair: a report, or the reason the
// output could not be scored.
struct Unscorable {
  std::string reason;
};
using Verdict = std::variant<VerificationReport, Unscorable>;

// Parses a verifier reply without throwing.
Verdict read_verdict(std::string_view raw);

gateway::ChatRequest verification_request(const std::string& model, const Claim& claim, const Article& article);

// Screening verdict from a single model. Gateway errors propagate.
Verdict initial_verdict(const gateway::Gateway& gw, const std::string& model, const Claim& claim,
                        const Article& article);

// True when the scores cover at least two of the three coarse labels.
// Throws EmptyList for an empty list.
bool screen_controversial(std::span<const LikertScore> scores);

struct ConsensusResult {
  std::optional<LikertScore> agreed;  // nullopt: no consensus
  friend bool operator==(const ConsensusResult&, const ConsensusResult&) = default;
};

// Agreed(m) iff some value m occurs at least twice and every score is within
// one point of m.
ConsensusResult consensus(const std::array<LikertScore, 3>& scores);

struct PanelVerdict {
  std::string model_id;
  Verdict verdict;
};

struct TrainingInstance {
  Claim claim;
  Pmid pmid = 0;
  std::string rationale;
  LikertScore score = LikertScore::neutral();
  bool is_source_article = false;
  std::string rationale_from;  // model that wrote the rationale

  friend bool operator==(const TrainingInstance&, const TrainingInstance&) = default;
};

void to_json(json& j, const TrainingInstance& t);
TrainingInstance instance_from_json(const json& j);

struct Dropped {
  std::string reason;  // "unscorable" or "no-consensus"
};

// Combines three panel verdicts. On agreement the rationale is drawn uniformly
// (mt19937_64 seeded with rng_seed) from the panel members that gave the
// agreed score.
std::variant<TrainingInstance, Dropped> assemble_instance(const Claim& claim, Pmid pmid,
                                                          const std::array<PanelVerdict, 3>& panel,
                                                          std::uint64_t rng_seed, bool is_source_article);

// Whitespace-separated words after trimming.
std::size_t word_count(std::string_view text);

struct WordStats {
  double mean = 0.0;
  std::size_t min = 0;
  std::size_t max = 0;
  double median = 0.0;
};

struct DatasetStats {
  std::size_t total = 0;
  std::array<std::size_t, 5> score_counts{};  // indexed by LikertScore::index()
  std::array<double, 5> score_fractions{};
  double support = 0.0;
  double nei = 0.0;
  double contradict = 0.0;
  WordStats claim_words;
  WordStats rationale_words;
};

// Throws EmptySet for no instances.
DatasetStats dataset_stats(std::span<const TrainingInstance> instances);

// Includes the published full-corpus label split as a reference line.
json to_json(const DatasetStats& s);

}  // namespace medv::synth
