#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "medverify/corpus.hpp"
#include "medverify/gateway.hpp"
#include "medverify/json_io.hpp"
#include "medverify/types.hpp"

namespace medv::guide {

struct CitationStatement {
  std::string doc_id;
  std::size_t passage = 0;
  std::string sentence;  // citation marker removed
  Pmid cited_pmid = 0;
  std::size_t start = 0;  // sentence span, passage-local offsets
  std::size_t end = 0;

  std::string case_id() const;
  friend bool operator==(const CitationStatement&, const CitationStatement&) = default;
};

void to_json(json& j, const CitationStatement& s);

struct BiocOptions {
  std::string citation_type = "citation";  // value of the "type" infon
  std::string pmid_key = "pmid";
};

struct ExtractResult {
  std::vector<CitationStatement> statements;
  std::size_t multi_citation = 0;  // sentences with two or more citation annotations
  std::size_t missing_pmid = 0;    // single-citation sentences whose annotation has no usable pmid
};

// Sentence spans [start, end) of a passage. A sentence ends at '.', '!' or '?'
// followed by whitespace and an uppercase letter, unless the text ends with a
// guarded abbreviation.
std::vector<std::pair<std::size_t, std::size_t>> split_sentences(std::string_view text);

// Annotation locations are document offsets as in BioC; they are converted to
// passage offsets. Throws BiocSchema on a malformed document.
ExtractResult extract_citation_statements(const json& bioc_document, const BiocOptions& options = {});

// Documents from every *.json file in `dir` (a BioC collection or a single
// document per file), in file name order.
std::vector<json> load_bioc_dir(const std::filesystem::path& dir);

// "yes" -> true, "no" -> false after trimming and lowercasing. Throws UnparseableAnswer.
bool parse_worthiness(std::string_view reply);

bool worthiness_filter(const gateway::Gateway& gw, const std::string& model, std::string_view claim);

struct FlaggedCase {
  CitationStatement statement;
  LikertScore verdict = LikertScore::partial_contradiction();
  std::string rationale;
};

void to_json(json& j, const FlaggedCase& f);

struct FlagResult {
  std::vector<FlaggedCase> flagged;
  std::size_t total = 0;
  std::array<std::size_t, 5> counts{};  // by LikertScore::index()
  std::array<double, 5> fractions{};
};

json to_json(const FlagResult& r);

FlagResult flag_contradictions(const std::vector<std::pair<CitationStatement, VerificationReport>>& verdicts);

struct SampleResult {
  std::vector<FlaggedCase> cases;  // partial contradictions first, then strong
  std::vector<std::string> warnings;
};

// Seeded uniform sample without replacement of min(n, size) cases from each
// of the two contradiction strata.
SampleResult stratified_sample(const std::vector<FlaggedCase>& flagged, std::size_t n_per_stratum,
                               std::uint64_t seed);

struct GuidelineServices {
  const gateway::Gateway* gateway = nullptr;
  std::string filter_model;
  std::string verifier_model;
  const corpus::ArticleStore* store = nullptr;
  std::size_t parallelism = 4;
};

struct GuidelineRun {
  std::size_t documents = 0;
  std::size_t statements = 0;
  std::size_t multi_citation = 0;
  std::size_t missing_pmid = 0;
  std::size_t not_worthy = 0;
  std::size_t unparseable_worthiness = 0;
  std::size_t article_missing = 0;
  std::size_t unscorable = 0;
  std::size_t gateway_errors = 0;
  FlagResult flags;
};

json to_json(const GuidelineRun& r);

GuidelineRun audit_guidelines(const std::vector<json>& documents, const BiocOptions& options,
                              const GuidelineServices& services);

}  // namespace medv::guide
