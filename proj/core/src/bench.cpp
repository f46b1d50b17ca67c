#include "medverify/bench.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <random>
#include <regex>

#include "medverify/error.hpp"
#include "medverify/verdict.hpp"

namespace medv::bench {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string collapse_spaces(std::string_view s) {
  std::string out;
  bool pending_space = false;
  for (char c : trim(s)) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = true;
      continue;
    }
    if (pending_space && !out.empty()) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

std::string id_string(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  return v.dump();
}

std::string join_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (!v.is_array()) throw Error(ErrorCode::Schema, "expected a string or a list of strings");
  std::string out;
  for (const json& part : v) {
    if (!part.is_string()) throw Error(ErrorCode::Schema, "expected a list of strings");
    if (!out.empty()) out.push_back(' ');
    out += trim(part.get<std::string>());
  }
  return out;
}

}  // namespace

void to_json(json& j, const BenchInstance& b) {
  j = json{{"dataset", b.dataset}, {"id", b.id},       {"claim", b.claim},
           {"title", b.title},     {"abstract", b.abstract}, {"label", std::string(to_string(b.gold))}};
}

void from_json(const json& j, BenchInstance& b) {
  b.dataset = require_string(j, "dataset");
  b.id = j.contains("id") ? id_string(j["id"]) : std::string();
  b.claim = require_string(j, "claim");
  if (trim(b.claim).empty()) throw Error(ErrorCode::Schema, "empty claim", "claim");
  b.title = j.contains("title") ? require_string(j, "title") : std::string();
  b.abstract = require_string(j, "abstract");
  b.gold = parse_three_way_label(require_string(j, "label"));
}

std::vector<BenchInstance> read_instances(const std::filesystem::path& path) {
  const JsonlFile file = read_jsonl(path);
  std::vector<BenchInstance> out;
  out.reserve(file.records.size());
  for (const json& rec : file.records) out.push_back(rec.get<BenchInstance>());
  return out;
}

void write_instances(const std::filesystem::path& path, const std::vector<BenchInstance>& instances) {
  JsonlWriter out(path, JsonlHeader{std::string(kInstanceSchema), 1});
  for (const auto& inst : instances) out.write(inst);
  out.commit();
}

ThreeWayLabel map_qa_answer(std::string_view answer) {
  const std::string a = lower(trim(answer));
  if (a == "yes") return ThreeWayLabel::Support;
  if (a == "maybe") return ThreeWayLabel::NEI;
  if (a == "no") return ThreeWayLabel::Contradict;
  throw Error(ErrorCode::UnknownAnswer, "expected yes, maybe or no; got '" + std::string(answer) + "'");
}

std::string question_to_claim(const gateway::Gateway& gw, const std::string& model, std::string_view question) {
  const auto resp = gw.complete(gateway::make_request(model, prompts::question_conversion(question)));
  std::string claim(trim(resp.content));
  if (claim.empty()) throw Error(ErrorCode::EmptyClaim, "model returned an empty claim");
  return claim;
}

std::string strip_citation_markers(std::string_view statement) {
  static const std::regex marker(R"(\s*\[\s*\d+(?:\s*(?:,|-|–)\s*\d+)*\s*\])");
  static const std::regex space_before_punct(R"(\s+([.,;:!?]))");
  std::string s = std::regex_replace(std::string(statement), marker, "");
  s = collapse_spaces(s);
  return std::regex_replace(s, space_before_punct, "$1");
}

ThreeWayLabel map_medaesqa_label(std::string_view label) {
  std::string l = lower(trim(label));
  std::replace(l.begin(), l.end(), '_', ' ');
  std::replace(l.begin(), l.end(), '-', ' ');
  if (l == "supporting" || l == "supports" || l == "support") return ThreeWayLabel::Support;
  if (l == "contradicting" || l == "contradicts" || l == "contradict") return ThreeWayLabel::Contradict;
  if (l == "neutral" || l == "not relevant") return ThreeWayLabel::NEI;
  throw Error(ErrorCode::Schema, "unknown citation label '" + std::string(label) + "'", "label");
}

FlattenResult flatten_medaesqa(const json& record, const corpus::ArticleStore& store, std::string_view dataset) {
  if (!record.is_object()) throw Error(ErrorCode::Schema, "answer record is not an object");
  const char* key = record.contains("statements") ? "statements" : "sentences";
  const json& statements = require(record, key);
  if (!statements.is_array()) throw Error(ErrorCode::Schema, "expected a list", key);
  const std::string record_id = record.contains("id") ? id_string(record["id"]) : std::string();

  FlattenResult out;
  for (std::size_t si = 0; si < statements.size(); ++si) {
    const json& st = statements[si];
    const std::string claim = strip_citation_markers(require_string(st, "text"));
    const json& citations = require(st, "citations");
    if (!citations.is_array()) throw Error(ErrorCode::Schema, "expected a list", "citations");
    for (const json& cit : citations) {
      const std::string label =
          cit.contains("label") ? require_string(cit, "label") : require_string(cit, "citation_assessment");
      const ThreeWayLabel gold = map_medaesqa_label(label);
      const auto pmid = cit.contains("pmid") ? as_pmid(cit["pmid"]) : std::nullopt;
      const Article* article = pmid && *pmid > 0 ? store.find(*pmid) : nullptr;
      if (article == nullptr || claim.empty()) {
        ++out.dropped;
        continue;
      }
      out.instances.push_back(BenchInstance{std::string(dataset),
                                            record_id + ":" + std::to_string(si) + ":" + std::to_string(*pmid),
                                            claim, article->title, article->abstract, gold});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

std::optional<ThreeWayLabel> multivers_label(std::string_view label) {
  const std::string l = lower(trim(label));
  if (l == "support" || l == "supports") return ThreeWayLabel::Support;
  if (l == "contradict" || l == "refutes" || l == "contradicts") return ThreeWayLabel::Contradict;
  if (l == "nei" || l == "not enough info" || l == "not_enough_info") return ThreeWayLabel::NEI;
  return std::nullopt;
}

std::vector<std::optional<std::string>> convert_questions(const gateway::Gateway& gw, const std::string& model,
                                                          const std::vector<std::string>& questions,
                                                          std::size_t parallelism) {
  std::vector<gateway::ChatRequest> reqs;
  reqs.reserve(questions.size());
  for (const auto& q : questions) reqs.push_back(gateway::make_request(model, prompts::question_conversion(q)));
  const auto results = gw.complete_batch(reqs, std::max<std::size_t>(parallelism, 1));
  std::vector<std::optional<std::string>> claims;
  claims.reserve(results.size());
  for (const auto& r : results) {
    const auto* resp = std::get_if<gateway::ChatResponse>(&r);
    if (resp == nullptr || trim(resp->content).empty()) {
      claims.emplace_back();
    } else {
      claims.emplace_back(std::string(trim(resp->content)));
    }
  }
  return claims;
}

}  // namespace

ConvertResult convert_multivers(const std::filesystem::path& claims, const std::filesystem::path& corpus_path,
                                std::string_view dataset) {
  std::map<std::string, std::pair<std::string, std::string>> docs;
  for (const json& d : read_jsonl(corpus_path).records) {
    docs[id_string(require(d, "doc_id"))] = {d.contains("title") ? require_string(d, "title") : std::string(),
                                             join_text(require(d, "abstract"))};
  }
  ConvertResult out;
  for (const json& c : read_jsonl(claims).records) {
    const std::string claim_id = id_string(require(c, "id"));
    const std::string claim = require_string(c, "claim");
    std::map<std::string, ThreeWayLabel> labels;
    if (c.contains("evidence") && c["evidence"].is_object()) {
      for (const auto& [doc, ev] : c["evidence"].items()) {
        const json& first = ev.is_array() ? (ev.empty() ? json() : ev[0]) : ev;
        if (!first.is_object() || !first.contains("label")) continue;
        if (auto l = multivers_label(first["label"].get<std::string>())) labels[doc] = *l;
      }
    }
    for (const char* key : {"cited_doc_ids", "doc_ids"}) {
      if (c.contains(key) && c[key].is_array()) {
        for (const json& d : c[key]) labels.emplace(id_string(d), ThreeWayLabel::NEI);
      }
    }
    for (const auto& [doc, gold] : labels) {
      auto it = docs.find(doc);
      if (it == docs.end()) {
        ++out.dropped;
        continue;
      }
      out.instances.push_back(
          BenchInstance{std::string(dataset), claim_id + ":" + doc, claim, it->second.first, it->second.second, gold});
    }
  }
  if (out.dropped > 0) out.notes.push_back(std::to_string(out.dropped) + " pairs reference documents absent from the corpus");
  return out;
}

ConvertResult convert_pubmedqa(const std::filesystem::path& path, const gateway::Gateway& gw, const std::string& model,
                               std::size_t parallelism) {
  const json doc = read_json_file(path);
  if (!doc.is_object()) throw Error(ErrorCode::Schema, "expected an object keyed by pmid", path.string());
  struct Pending {
    std::string id, question, abstract;
    ThreeWayLabel gold;
  };
  std::vector<Pending> pending;
  ConvertResult out;
  std::size_t no_conclusion = 0;
  for (const auto& [pmid, rec] : doc.items()) {
    const json& contexts = require(rec, "CONTEXTS");
    const json labels = rec.contains("LABELS") ? rec["LABELS"] : json::array();
    bool conclusion_found = rec.contains("LONG_ANSWER") && rec["LONG_ANSWER"].is_string() &&
                            !trim(rec["LONG_ANSWER"].get<std::string>()).empty();
    std::string abstract;
    for (std::size_t i = 0; i < contexts.size(); ++i) {
      const std::string label = i < labels.size() && labels[i].is_string() ? lower(labels[i].get<std::string>()) : "";
      if (label.find("conclusion") != std::string::npos) {
        conclusion_found = true;
        continue;
      }
      if (!abstract.empty()) abstract.push_back(' ');
      abstract += trim(contexts[i].get<std::string>());
    }
    if (!conclusion_found) {
      ++no_conclusion;
      continue;
    }
    pending.push_back({pmid, require_string(rec, "QUESTION"), abstract,
                       map_qa_answer(require_string(rec, "final_decision"))});
  }
  std::vector<std::string> questions;
  for (const auto& p : pending) questions.push_back(p.question);
  const auto claims = convert_questions(gw, model, questions, parallelism);
  std::size_t failed = 0;
  for (std::size_t i = 0; i < pending.size(); ++i) {
    if (!claims[i]) {
      ++failed;
      continue;
    }
    out.instances.push_back(BenchInstance{"pubmedqa", pending[i].id, *claims[i], "", pending[i].abstract, pending[i].gold});
  }
  out.dropped = no_conclusion + failed;
  out.notes.push_back(std::to_string(no_conclusion) + " records without a detectable conclusion section");
  out.notes.push_back(std::to_string(failed) + " questions could not be converted");
  return out;
}

ConvertResult convert_bioasq(const std::filesystem::path& path, const gateway::Gateway& gw, const std::string& model,
                             std::size_t parallelism) {
  const json doc = read_json_file(path);
  const json& questions = require(doc, "questions");
  struct Pending {
    std::string id, question, source;
    ThreeWayLabel gold;
  };
  std::vector<Pending> pending;
  ConvertResult out;
  std::size_t no_snippets = 0;
  for (const json& q : questions) {
    if (!q.contains("type") || q["type"] != "yesno") continue;
    const json& answer = require(q, "exact_answer");
    const std::string ans = join_text(answer);
    std::string source;
    if (q.contains("snippets") && q["snippets"].is_array()) {
      for (const json& s : q["snippets"]) {
        if (!s.contains("text") || !s["text"].is_string()) continue;
        if (!source.empty()) source.push_back(' ');
        source += trim(s["text"].get<std::string>());
      }
    }
    if (source.empty()) {
      ++no_snippets;
      continue;
    }
    pending.push_back({id_string(require(q, "id")), require_string(q, "body"), source, map_qa_answer(ans)});
  }
  std::vector<std::string> qs;
  for (const auto& p : pending) qs.push_back(p.question);
  const auto claims = convert_questions(gw, model, qs, parallelism);
  std::size_t failed = 0;
  for (std::size_t i = 0; i < pending.size(); ++i) {
    if (!claims[i]) {
      ++failed;
      continue;
    }
    out.instances.push_back(BenchInstance{"bioasq", pending[i].id, *claims[i], "", pending[i].source, pending[i].gold});
  }
  out.dropped = no_snippets + failed;
  out.notes.push_back(std::to_string(no_snippets) + " yes/no questions without snippets");
  out.notes.push_back(std::to_string(failed) + " questions could not be converted");
  return out;
}

ConvertResult convert_medaesqa(const std::filesystem::path& path, const corpus::ArticleStore& store) {
  ConvertResult out;
  for (const json& rec : read_jsonl(path).records) {
    FlattenResult f = flatten_medaesqa(rec, store);
    out.dropped += f.dropped;
    std::move(f.instances.begin(), f.instances.end(), std::back_inserter(out.instances));
  }
  out.notes.push_back(std::to_string(out.dropped) + " statement-pmid pairs dropped for missing or unknown pmids");
  return out;
}

// ---------------------------------------------------------------------------

std::optional<LikertScore> parse_prediction(std::string_view line) {
  const json value = json::parse(line, nullptr, false);
  auto from_raw = [](std::string_view raw) -> std::optional<LikertScore> {
    try {
      return parse_verification_output(raw).score;
    } catch (const Error&) {
      return std::nullopt;
    }
  };
  if (value.is_discarded()) return from_raw(line);
  if (value.is_number_integer()) return LikertScore::from_int(value.get<long long>());
  if (value.is_string()) return from_raw(value.get<std::string>());
  if (value.is_object()) {
    if (value.contains("score") && value["score"].is_number_integer()) {
      return LikertScore::from_int(value["score"].get<long long>());
    }
    if (value.contains("output") && value["output"].is_string()) return from_raw(value["output"].get<std::string>());
  }
  return std::nullopt;
}

EvalSummary evaluate(const std::vector<std::optional<LikertScore>>& predictions,
                     const std::vector<BenchInstance>& instances, const std::optional<BootstrapSettings>& bootstrap) {
  if (predictions.size() != instances.size()) {
    throw Error(ErrorCode::LengthMismatch, std::to_string(predictions.size()) + " predictions vs " +
                                               std::to_string(instances.size()) + " instances");
  }
  std::map<std::string, std::vector<double>> correct;
  EvalSummary s;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& p = predictions[i];
    if (!p) ++s.unparseable;
    correct[instances[i].dataset].push_back(p && coarse_label(*p) == instances[i].gold ? 1.0 : 0.0);
  }
  double sum = 0.0;
  for (const auto& [tag, hits] : correct) {
    const double acc = mean(hits);
    s.per_dataset_accuracy[tag] = acc;
    s.n[tag] = hits.size();
    sum += acc;
  }
  s.macro_average = correct.empty() ? 0.0 : sum / static_cast<double>(correct.size());

  if (bootstrap && !correct.empty()) {
    for (const auto& [tag, hits] : correct) s.per_dataset_ci[tag] = bootstrap_ci(hits, *bootstrap);
    // Macro interval: resample every dataset independently and average the accuracies.
    std::mt19937_64 rng(bootstrap->seed);
    std::vector<double> macros(bootstrap->iterations);
    for (auto& m : macros) {
      double total = 0.0;
      for (const auto& [_, hits] : correct) {
        double hit_sum = 0.0;
        for (std::size_t i = 0; i < hits.size(); ++i) hit_sum += hits[rng() % hits.size()];
        total += hit_sum / static_cast<double>(hits.size());
      }
      m = total / static_cast<double>(correct.size());
    }
    std::sort(macros.begin(), macros.end());
    const double tail = (1.0 - bootstrap->level) / 2.0;
    s.macro_ci = Interval{macros[nearest_rank(tail, macros.size()) - 1],
                          macros[nearest_rank(1.0 - tail, macros.size()) - 1]};
  }
  return s;
}

EvalSummary evaluate(const std::filesystem::path& predictions, const std::filesystem::path& instances,
                     const std::optional<BootstrapSettings>& bootstrap) {
  const auto lines = read_data_lines(predictions);
  std::vector<std::optional<LikertScore>> preds;
  preds.reserve(lines.size());
  for (const auto& l : lines) preds.push_back(parse_prediction(l));
  return evaluate(preds, read_instances(instances), bootstrap);
}

json to_json(const EvalSummary& s) {
  json j{{"per_dataset_accuracy", s.per_dataset_accuracy},
         {"n", s.n},
         {"macro_average", s.macro_average},
         {"unparseable", s.unparseable}};
  if (!s.per_dataset_ci.empty()) {
    json cis = json::object();
    for (const auto& [tag, ci] : s.per_dataset_ci) cis[tag] = {ci.lo, ci.hi};
    j["per_dataset_ci"] = std::move(cis);
  }
  if (s.macro_ci) j["macro_ci"] = {s.macro_ci->lo, s.macro_ci->hi};
  return j;
}

}  // namespace medv::bench
