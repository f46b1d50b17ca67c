#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "medverify/bootstrap.hpp"
#include "medverify/corpus.hpp"
#include "medverify/gateway.hpp"
#include "medverify/json_io.hpp"
#include "medverify/types.hpp"

namespace medv::cite {

enum class Style { NLM, AMA, Vancouver, APA, MLA, PMID, DOI, Unknown };

std::string_view to_string(Style s) noexcept;
// Case-insensitive; throws InvalidArgument for an unknown name.
Style parse_style(std::string_view name);

struct ClaimCitation {
  std::string claim;
  std::string citation;
  Style style_hint = Style::Unknown;

  friend bool operator==(const ClaimCitation&, const ClaimCitation&) = default;
};

// Reads the first top-level JSON array in an extraction reply, ignoring
// markdown code fences and any prose around the array. Each element must be an
// object with nonempty string "claim" and "citation". Throws Json or Schema.
std::vector<ClaimCitation> parse_extraction_json(std::string_view model_output, Style hint = Style::Unknown);

// Strips leading enumeration ("3.", "[12]", "12)") and trailing ".;," then
// collapses whitespace. Under the PMID and DOI hints returns the bare
// identifier instead, or throws NoIdentifier. Idempotent.
std::string normalize_citation(std::string_view raw, Style hint);

// Free-text citation -> PMID candidates, best first.
class CitationMatcher {
 public:
  virtual ~CitationMatcher() = default;
  virtual std::vector<Pmid> match(std::string_view citation) const = 0;
};

// DOI -> PMID, nullopt when the service knows no PMID for it.
class IdConverter {
 public:
  virtual ~IdConverter() = default;
  virtual std::optional<Pmid> convert(std::string_view doi) const = 0;
};

// GET {base}/esearch.fcgi?db=pubmed&retmode=json&term=<citation>, reading
// esearchresult.idlist. Throws Transport on failure.
class HttpCitationMatcher final : public CitationMatcher {
 public:
  explicit HttpCitationMatcher(gateway::HttpSettings settings);
  std::vector<Pmid> match(std::string_view citation) const override;

 private:
  gateway::HttpSettings settings_;
};

// GET {base}/idconv/v1.0/?ids=<doi>&format=json, reading records[0].pmid.
class HttpIdConverter final : public IdConverter {
 public:
  explicit HttpIdConverter(gateway::HttpSettings settings);
  std::optional<Pmid> convert(std::string_view doi) const override;

 private:
  gateway::HttpSettings settings_;
};

enum class MapMethod { Direct, CitationMatcher, IdConverter };
std::string_view to_string(MapMethod m) noexcept;

struct PmidMapping {
  std::optional<Pmid> pmid;  // set iff mapped
  std::string reason;        // why unmapped: unknown-pmid, no-match, no-identifier, service-error
  MapMethod method = MapMethod::CitationMatcher;
  std::vector<Pmid> candidates;  // everything the matcher returned

  bool mapped() const noexcept { return pmid.has_value(); }
  friend bool operator==(const PmidMapping&, const PmidMapping&) = default;
};

// Resolves a normalized citation. Service failures become Unmapped("service-error").
PmidMapping map_to_pmid(std::string_view citation, Style hint, const corpus::ArticleStore& store,
                        const CitationMatcher& matcher, const IdConverter& idconv);

// normalize_citation followed by map_to_pmid; NoIdentifier becomes Unmapped("no-identifier").
PmidMapping resolve_citation(std::string_view raw, Style hint, const corpus::ArticleStore& store,
                             const CitationMatcher& matcher, const IdConverter& idconv);

enum class VerifyStatus { NotMapped, ArticleMissing, Unscorable, ServiceError, Verified };
std::string_view to_string(VerifyStatus s) noexcept;

struct AuditRecord {
  std::string answer_id;
  std::string claim;
  std::string citation;
  PmidMapping mapping;
  VerifyStatus status = VerifyStatus::NotMapped;
  std::optional<LikertScore> verdict;  // set iff status == Verified
  std::string rationale;
};

json to_json(const AuditRecord& r);

struct AnswerAudit {
  std::string answer_id;
  std::vector<AuditRecord> records;  // may be empty
};

struct Metric {
  std::optional<double> value;  // nullopt when the denominator is zero
  std::optional<bench::Interval> ci;
};

struct AuditMetrics {
  std::size_t answers = 0;
  std::size_t pairs = 0;
  std::size_t mapped = 0;
  std::size_t verified = 0;
  Metric claims_per_answer;
  Metric mapping_rate;
  Metric avg_pmid;
  Metric hallucination_rate;
  Metric supported_fraction;
  Metric supported_count_per_answer;
};

json to_json(const AuditMetrics& m);

// Throws EmptySet when there are no answers.
AuditMetrics compute_metrics(const std::vector<AnswerAudit>& answers, const bench::BootstrapSettings& bootstrap = {});

struct AuditServices {
  const gateway::Gateway* gateway = nullptr;
  std::string extractor_model;
  std::string verifier_model;
  const corpus::ArticleStore* store = nullptr;
  const CitationMatcher* matcher = nullptr;
  const IdConverter* idconv = nullptr;
  std::size_t parallelism = 4;
};

struct AnswerText {
  std::string answer_id;
  std::string text;
};

struct AuditRun {
  std::vector<AnswerAudit> answers;  // answers whose extraction parsed
  std::vector<std::string> extraction_failures;
};

// Extraction, resolution and verification for a set of answers.
AuditRun audit_answers(const std::vector<AnswerText>& answers, Style hint, const AuditServices& services);

// Every *.txt file in `dir`, id = file stem, sorted by id.
std::vector<AnswerText> load_answers(const std::filesystem::path& dir);

}  // namespace medv::cite
