#include "medverify/synthgen.hpp"

#include <algorithm>
#include <random>

#include "medverify/error.hpp"
#include "medverify/prompts.hpp"
#include "medverify/verdict.hpp"

namespace medv::synth {

std::string claim_id(Pmid source_pmid, Polarity polarity) {
  return std::to_string(source_pmid) + (polarity == Polarity::SupportedBy ? "-s" : "-r");
}

Claim make_claim(const Article& source, Polarity polarity, std::string_view reply) {
  const std::string_view text = trim(reply);
  if (text.empty()) throw Error(ErrorCode::EmptyClaim, "empty claim for pmid " + std::to_string(source.pmid));
  return Claim{claim_id(source.pmid, polarity), std::string(text), source.pmid, polarity};
}

Claim generate_claim(const gateway::Gateway& gw, const std::string& model, const Article& article,
                     Polarity polarity) {
  if (trim(article.title).empty() || trim(article.abstract).empty()) {
    throw Error(ErrorCode::InvalidArgument, "article needs a title and an abstract", std::to_string(article.pmid));
  }
  const auto resp = gw.complete(gateway::make_request(model, prompts::claim_generation(article, polarity)));
  return make_claim(article, polarity, resp.content);
}

Verdict read_verdict(std::string_view raw) {
  try {
    return parse_verification_output(raw);
  } catch (const Error& e) {
    return Unscorable{std::string(to_string(e.code()))};
  }
}

gateway::ChatRequest verification_request(const std::string& model, const Claim& claim, const Article& article) {
  return gateway::make_request(model, prompts::verification(prompts::article_text(article), claim.text));
}

Verdict initial_verdict(const gateway::Gateway& gw, const std::string& model, const Claim& claim,
                        const Article& article) {
  return read_verdict(gw.complete(verification_request(model, claim, article)).content);
}

bool screen_controversial(std::span<const LikertScore> scores) {
  if (scores.empty()) throw Error(ErrorCode::EmptyList, "no scorable pairs to screen");
  const ThreeWayLabel first = coarse_label(scores.front());
  return std::any_of(scores.begin(), scores.end(), [&](LikertScore s) { return coarse_label(s) != first; });
}

ConsensusResult consensus(const std::array<LikertScore, 3>& scores) {
  for (const LikertScore m : scores) {
    const auto votes = std::count(scores.begin(), scores.end(), m);
    const bool close = std::all_of(scores.begin(), scores.end(), [&](LikertScore s) {
      const int d = s.value() - m.value();
      return d >= -1 && d <= 1;
    });
    if (votes >= 2 && close) return ConsensusResult{m};
  }
  return ConsensusResult{};
}

void to_json(json& j, const TrainingInstance& t) {
  j = json{{"claim", t.claim},
           {"pmid", t.pmid},
           {"rationale", t.rationale},
           {"score", t.score.value()},
           {"is_source_article", t.is_source_article},
           {"rationale_from", t.rationale_from}};
}

TrainingInstance instance_from_json(const json& j) {
  TrainingInstance t;
  t.claim = require(j, "claim").get<Claim>();
  t.pmid = require_int(j, "pmid");
  t.rationale = require_string(j, "rationale");
  t.score = score_from_json(require(j, "score"));
  const json& src = require(j, "is_source_article");
  if (!src.is_boolean()) throw Error(ErrorCode::Schema, "expected a boolean", "is_source_article");
  t.is_source_article = src.get<bool>();
  t.rationale_from = j.contains("rationale_from") ? require_string(j, "rationale_from") : std::string();
  return t;
}

std::variant<TrainingInstance, Dropped> assemble_instance(const Claim& claim, Pmid pmid,
                                                          const std::array<PanelVerdict, 3>& panel,
                                                          std::uint64_t rng_seed, bool is_source_article) {
  std::array<LikertScore, 3> scores{LikertScore::neutral(), LikertScore::neutral(), LikertScore::neutral()};
  for (std::size_t i = 0; i < panel.size(); ++i) {
    const auto* report = std::get_if<VerificationReport>(&panel[i].verdict);
    if (report == nullptr) return Dropped{"unscorable"};
    scores[i] = report->score;
  }
  const ConsensusResult c = consensus(scores);
  if (!c.agreed) return Dropped{"no-consensus"};

  std::vector<std::size_t> agreeing;
  for (std::size_t i = 0; i < panel.size(); ++i) {
    if (scores[i] == *c.agreed) agreeing.push_back(i);
  }
  std::mt19937_64 rng(rng_seed);
  const std::size_t pick = agreeing[rng() % agreeing.size()];
  const auto& chosen = std::get<VerificationReport>(panel[pick].verdict);
  return TrainingInstance{claim, pmid, chosen.rationale, *c.agreed, is_source_article, panel[pick].model_id};
}

std::size_t word_count(std::string_view text) {
  std::size_t words = 0;
  bool in_word = false;
  for (char c : trim(text)) {
    const bool space = c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
    if (!space && !in_word) ++words;
    in_word = !space;
  }
  return words;
}

namespace {

WordStats summarize(std::vector<std::size_t> counts) {
  WordStats w;
  std::sort(counts.begin(), counts.end());
  double sum = 0.0;
  for (auto c : counts) sum += static_cast<double>(c);
  w.mean = sum / static_cast<double>(counts.size());
  w.min = counts.front();
  w.max = counts.back();
  const std::size_t mid = counts.size() / 2;
  w.median = counts.size() % 2 == 1 ? static_cast<double>(counts[mid])
                                    : 0.5 * static_cast<double>(counts[mid - 1] + counts[mid]);
  return w;
}

json to_json(const WordStats& w) {
  return json{{"mean", w.mean}, {"min", w.min}, {"max", w.max}, {"median", w.median}};
}

}  // namespace

DatasetStats dataset_stats(std::span<const TrainingInstance> instances) {
  if (instances.empty()) throw Error(ErrorCode::EmptySet, "no instances to summarize");
  DatasetStats s;
  s.total = instances.size();
  std::vector<std::size_t> claim_words, rationale_words;
  std::array<std::size_t, 3> coarse{};
  for (const auto& inst : instances) {
    ++s.score_counts[inst.score.index()];
    ++coarse[static_cast<std::size_t>(coarse_label(inst.score))];
    claim_words.push_back(word_count(inst.claim.text));
    rationale_words.push_back(word_count(inst.rationale));
  }
  const auto n = static_cast<double>(s.total);
  for (std::size_t i = 0; i < 5; ++i) s.score_fractions[i] = static_cast<double>(s.score_counts[i]) / n;
  s.support = static_cast<double>(coarse[static_cast<std::size_t>(ThreeWayLabel::Support)]) / n;
  s.nei = static_cast<double>(coarse[static_cast<std::size_t>(ThreeWayLabel::NEI)]) / n;
  s.contradict = static_cast<double>(coarse[static_cast<std::size_t>(ThreeWayLabel::Contradict)]) / n;
  s.claim_words = summarize(std::move(claim_words));
  s.rationale_words = summarize(std::move(rationale_words));
  return s;
}

json to_json(const DatasetStats& s) {
  json counts = json::object();
  json fractions = json::object();
  for (const LikertScore score : LikertScore::all()) {
    const std::string key = (score.value() > 0 ? "+" : "") + std::to_string(score.value());
    counts[key] = s.score_counts[score.index()];
    fractions[key] = s.score_fractions[score.index()];
  }
  return json{{"total", s.total},
              {"score_counts", std::move(counts)},
              {"score_fractions", std::move(fractions)},
              {"coarse_fractions", {{"support", s.support}, {"nei", s.nei}, {"contradict", s.contradict}}},
              {"claim_words", to_json(s.claim_words)},
              {"rationale_words", to_json(s.rationale_words)},
              // Label split of the published 1.5M-instance corpus, for comparison only.
              {"reference_coarse_fractions", {{"support", 0.383}, {"nei", 0.364}, {"contradict", 0.253}}}};
}

}  // namespace medv::synth
