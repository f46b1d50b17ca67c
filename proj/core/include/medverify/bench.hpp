#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "medverify/bootstrap.hpp"
#include "medverify/corpus.hpp"
#include "medverify/gateway.hpp"
#include "medverify/json_io.hpp"
#include "medverify/types.hpp"

namespace medv::bench {

// One claim-source pair with a three-way gold label.
struct BenchInstance {
  std::string dataset;
  std::string id;
  std::string claim;
  std::string title;
  std::string abstract;
  ThreeWayLabel gold = ThreeWayLabel::NEI;

  friend bool operator==(const BenchInstance&, const BenchInstance&) = default;
};

void to_json(json& j, const BenchInstance& b);
void from_json(const json& j, BenchInstance& b);

inline constexpr std::string_view kInstanceSchema = "bench-instances";

std::vector<BenchInstance> read_instances(const std::filesystem::path& path);
void write_instances(const std::filesystem::path& path, const std::vector<BenchInstance>& instances);

// yes -> Support, maybe -> NEI, no -> Contradict (case-insensitive).
// Throws UnknownAnswer for anything else.
ThreeWayLabel map_qa_answer(std::string_view answer);

// Rewrites a yes/no question as the claim that holds if the answer is yes.
// Throws EmptyClaim on a blank reply; gateway errors propagate.
std::string question_to_claim(const gateway::Gateway& gw, const std::string& model, std::string_view question);

// Removes bracketed numeric citation markers ("[3]", "[1, 4]", "[2-5]") and
// tidies the spacing they leave behind.
std::string strip_citation_markers(std::string_view statement);

// supporting -> Support, contradicting -> Contradict, neutral / not relevant -> NEI.
ThreeWayLabel map_medaesqa_label(std::string_view label);

struct FlattenResult {
  std::vector<BenchInstance> instances;
  std::size_t dropped = 0;  // citations whose pmid is missing, invalid or absent from the store
};

// Flattens one answer record
//   {"id": "...", "statements": [{"text": "...", "citations": [{"pmid": 1, "label": "supporting"}]}]}
// into one instance per (statement, pmid). Throws Schema on a malformed record.
FlattenResult flatten_medaesqa(const json& record, const corpus::ArticleStore& store,
                               std::string_view dataset = "medaesqa");

struct ConvertResult {
  std::vector<BenchInstance> instances;
  std::size_t dropped = 0;
  std::vector<std::string> notes;
};

// Adapters from upstream release formats to BenchInstance. Field mappings:
//  scifact / healthver: claims JSONL {id, claim, evidence{doc_id: {label} or [{label}]},
//    cited_doc_ids|doc_ids} plus corpus JSONL {doc_id, title, abstract (string or sentence list)};
//    evidence label SUPPORT -> Support, CONTRADICT -> Contradict; cited docs without evidence -> NEI.
//  pubmedqa: {pmid: {QUESTION, CONTEXTS, LABELS, LONG_ANSWER, final_decision}}; the source is
//    CONTEXTS minus any CONCLUSION-labelled part; records with no detectable conclusion are dropped.
//  bioasq: {"questions": [{id, type, body, exact_answer, snippets[{text}]}]}, yes/no questions only;
//    the source is the joined snippet text.
//  medaesqa: JSONL of answer records for flatten_medaesqa.
ConvertResult convert_multivers(const std::filesystem::path& claims, const std::filesystem::path& corpus,
                                std::string_view dataset);
ConvertResult convert_pubmedqa(const std::filesystem::path& path, const gateway::Gateway& gw,
                               const std::string& model, std::size_t parallelism);
ConvertResult convert_bioasq(const std::filesystem::path& path, const gateway::Gateway& gw,
                             const std::string& model, std::size_t parallelism);
ConvertResult convert_medaesqa(const std::filesystem::path& path, const corpus::ArticleStore& store);

struct EvalSummary {
  std::map<std::string, double> per_dataset_accuracy;
  std::map<std::string, std::size_t> n;
  double macro_average = 0.0;
  std::size_t unparseable = 0;
  // Present when bootstrap settings were supplied.
  std::map<std::string, Interval> per_dataset_ci;
  std::optional<Interval> macro_ci;
};

json to_json(const EvalSummary& s);

// Reads one prediction line: an integer score, an object with an integer
// "score" or a string "output", or raw verifier text (JSON string or bare).
// Returns nullopt when no valid score can be read.
std::optional<LikertScore> parse_prediction(std::string_view line);

// Accuracy per dataset tag after projecting predictions onto the three-way
// labels; unreadable predictions count as wrong. The macro average is the
// unweighted mean over the tags present.
EvalSummary evaluate(const std::vector<std::optional<LikertScore>>& predictions,
                     const std::vector<BenchInstance>& instances,
                     const std::optional<BootstrapSettings>& bootstrap = std::nullopt);

// File form. Throws Io or LengthMismatch.
EvalSummary evaluate(const std::filesystem::path& predictions, const std::filesystem::path& instances,
                     const std::optional<BootstrapSettings>& bootstrap = std::nullopt);

}  // namespace medv::bench
