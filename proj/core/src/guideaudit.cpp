#include "medverify/guideaudit.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <random>

#include "medverify/error.hpp"
#include "medverify/prompts.hpp"
#include "medverify/verdict.hpp"

namespace medv::guide {

std::string CitationStatement::case_id() const {
  return doc_id + ":" + std::to_string(passage) + ":" + std::to_string(start);
}

void to_json(json& j, const CitationStatement& s) {
  j = json{{"doc_id", s.doc_id}, {"passage", s.passage}, {"sentence", s.sentence},
           {"cited_pmid", s.cited_pmid}, {"span", {s.start, s.end}}};
}

namespace {

constexpr std::string_view kAbbreviations[] = {"e.g.", "i.e.", "Fig.", "Figs.", "et al.", "vs.", "cf.", "Dr.",
                                               "No.", "approx.", "Ref.", "Refs.", "Eq.", "etc."};

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

bool ends_with_abbreviation(std::string_view text, std::size_t terminator) {
  const std::string_view head = text.substr(0, terminator + 1);
  for (std::string_view abbr : kAbbreviations) {
    if (head.size() < abbr.size() || head.substr(head.size() - abbr.size()) != abbr) continue;
    const std::size_t before = head.size() - abbr.size();
    if (before == 0 || is_space(head[before - 1]) || head[before - 1] == '(') return true;
  }
  return false;
}

[[noreturn]] void bioc_error(const std::string& message, const std::string& where) {
  throw Error(ErrorCode::BiocSchema, message, where);
}

std::size_t offset_of(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key) || !obj[key].is_number_integer() || obj[key].get<long long>() < 0) {
    bioc_error(std::string("expected a non-negative integer \"") + key + "\"", where);
  }
  return obj[key].get<std::size_t>();
}

std::optional<Pmid> infon_pmid(const json& infons, const std::string& key) {
  if (!infons.contains(key)) return std::nullopt;
  const json& v = infons[key];
  if (v.is_number_integer()) {
    const auto p = v.get<Pmid>();
    return p > 0 ? std::optional<Pmid>(p) : std::nullopt;
  }
  if (!v.is_string()) return std::nullopt;
  const std::string_view s = trim(v.get_ref<const std::string&>());
  Pmid p = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), p);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || p <= 0) return std::nullopt;
  return p;
}

struct Marker {
  std::size_t start;  // passage-local
  std::size_t end;
  std::optional<Pmid> pmid;
};

std::string remove_markers(std::string_view sentence, std::size_t base, const std::vector<const Marker*>& markers) {
  std::string out;
  std::size_t pos = 0;
  for (const Marker* m : markers) {
    const std::size_t s = std::clamp(m->start, base, base + sentence.size()) - base;
    const std::size_t e = std::clamp(m->end, base, base + sentence.size()) - base;
    if (s < pos) continue;
    out.append(sentence.substr(pos, s - pos));
    pos = e;
  }
  out.append(sentence.substr(pos));

  std::string tidy;
  for (char c : out) {
    if (is_space(c)) {
      if (!tidy.empty() && tidy.back() != ' ') tidy.push_back(' ');
      continue;
    }
    if ((c == '.' || c == ',' || c == ';' || c == ':' || c == '!' || c == '?' || c == ')') && !tidy.empty() &&
        tidy.back() == ' ') {
      tidy.pop_back();
    }
    tidy.push_back(c);
  }
  return std::string(trim(tidy));
}

}  // namespace

std::vector<std::pair<std::size_t, std::size_t>> split_sentences(std::string_view text) {
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  std::size_t start = 0;
  const auto skip_space = [&](std::size_t i) {
    while (i < text.size() && is_space(text[i])) ++i;
    return i;
  };
  start = skip_space(0);
  for (std::size_t i = start; i < text.size(); ++i) {
    const char c = text[i];
    if (c != '.' && c != '!' && c != '?') continue;
    if (i + 1 >= text.size() || !is_space(text[i + 1])) continue;
    const std::size_t next = skip_space(i + 1);
    if (next >= text.size() || !std::isupper(static_cast<unsigned char>(text[next]))) continue;
    if (c == '.' && ends_with_abbreviation(text, i)) continue;
    spans.emplace_back(start, i + 1);
    start = next;
    i = next - 1;
  }
  std::size_t end = text.size();
  while (end > start && is_space(text[end - 1])) --end;
  if (end > start) spans.emplace_back(start, end);
  return spans;
}

ExtractResult extract_citation_statements(const json& doc, const BiocOptions& options) {
  if (!doc.is_object()) bioc_error("document must be an object", "document");
  if (!doc.contains("id") || !doc["id"].is_string()) bioc_error("document lacks a string \"id\"", "document");
  const std::string doc_id = doc["id"].get<std::string>();
  if (!doc.contains("passages") || !doc["passages"].is_array()) bioc_error("document lacks \"passages\"", doc_id);

  ExtractResult result;
  const json& passages = doc["passages"];
  for (std::size_t p = 0; p < passages.size(); ++p) {
    const json& passage = passages[p];
    const std::string where = doc_id + ".passages[" + std::to_string(p) + "]";
    if (!passage.is_object()) bioc_error("passage must be an object", where);
    const std::size_t poffset = offset_of(passage, "offset", where);
    std::string text;
    if (passage.contains("text")) {
      if (!passage["text"].is_string()) bioc_error("passage text must be a string", where);
      text = passage["text"].get<std::string>();
    }

    std::vector<Marker> markers;
    if (passage.contains("annotations")) {
      const json& anns = passage["annotations"];
      if (!anns.is_array()) bioc_error("annotations must be an array", where);
      for (std::size_t a = 0; a < anns.size(); ++a) {
        const json& ann = anns[a];
        const std::string awhere = where + ".annotations[" + std::to_string(a) + "]";
        if (!ann.is_object()) bioc_error("annotation must be an object", awhere);
        const json infons = ann.value("infons", json::object());
        if (!infons.is_object()) bioc_error("infons must be an object", awhere);
        const auto type = infons.find("type");
        if (type == infons.end() || !type->is_string() || type->get<std::string>() != options.citation_type) continue;
        if (!ann.contains("locations") || !ann["locations"].is_array() || ann["locations"].empty()) {
          bioc_error("citation annotation lacks locations", awhere);
        }
        std::size_t lo = SIZE_MAX, hi = 0;
        for (const json& loc : ann["locations"]) {
          if (!loc.is_object()) bioc_error("location must be an object", awhere);
          const std::size_t off = offset_of(loc, "offset", awhere);
          const std::size_t len = offset_of(loc, "length", awhere);
          if (off < poffset || off + len > poffset + text.size()) bioc_error("location outside its passage", awhere);
          lo = std::min(lo, off - poffset);
          hi = std::max(hi, off - poffset + len);
        }
        markers.push_back({lo, hi, infon_pmid(infons, options.pmid_key)});
      }
    }
    if (markers.empty()) continue;
    std::sort(markers.begin(), markers.end(), [](const Marker& a, const Marker& b) { return a.start < b.start; });

    const auto spans = split_sentences(text);
    for (std::size_t s = 0; s < spans.size(); ++s) {
      // A marker belongs to the sentence whose region (up to the next sentence) holds its start.
      const std::size_t region_end = s + 1 < spans.size() ? spans[s + 1].first : text.size();
      std::vector<const Marker*> inside;
      for (const Marker& m : markers) {
        if (m.start >= spans[s].first && m.start < region_end) inside.push_back(&m);
      }
      if (inside.empty()) continue;
      if (inside.size() > 1) {
        ++result.multi_citation;
        continue;
      }
      if (!inside.front()->pmid) {
        ++result.missing_pmid;
        continue;
      }
      const auto [start, end] = spans[s];
      std::string sentence = remove_markers(std::string_view(text).substr(start, end - start), start, inside);
      if (sentence.empty()) continue;
      result.statements.push_back({doc_id, p, std::move(sentence), *inside.front()->pmid, start, end});
    }
  }
  return result;
}

std::vector<json> load_bioc_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) throw Error(ErrorCode::Io, "BioC directory not found", dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<json> docs;
  for (const auto& f : files) {
    json j = read_json_file(f);
    if (j.contains("documents")) {
      if (!j["documents"].is_array()) bioc_error("\"documents\" must be an array", f.string());
      for (auto& d : j["documents"]) docs.push_back(std::move(d));
    } else {
      docs.push_back(std::move(j));
    }
  }
  return docs;
}

bool parse_worthiness(std::string_view reply) {
  std::string answer(trim(reply));
  for (char& c : answer) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (answer == "yes") return true;
  if (answer == "no") return false;
  throw Error(ErrorCode::UnparseableAnswer, "expected yes or no, got '" + std::string(trim(reply)) + "'");
}

bool worthiness_filter(const gateway::Gateway& gw, const std::string& model, std::string_view claim) {
  if (trim(claim).empty()) throw Error(ErrorCode::EmptyClaim, "empty claim");
  return parse_worthiness(gw.complete(gateway::make_request(model, prompts::worthiness_check(claim))).content);
}

void to_json(json& j, const FlaggedCase& f) {
  j = json{{"case_id", f.statement.case_id()},
           {"statement", f.statement},
           {"verdict", f.verdict.value()},
           {"rationale", f.rationale}};
}

FlagResult flag_contradictions(const std::vector<std::pair<CitationStatement, VerificationReport>>& verdicts) {
  FlagResult r;
  r.total = verdicts.size();
  for (const auto& [statement, report] : verdicts) {
    ++r.counts[report.score.index()];
    if (report.score.value() < 0) r.flagged.push_back({statement, report.score, report.rationale});
  }
  if (r.total > 0) {
    for (std::size_t i = 0; i < 5; ++i) r.fractions[i] = static_cast<double>(r.counts[i]) / static_cast<double>(r.total);
  }
  return r;
}

json to_json(const FlagResult& r) {
  json counts = json::object();
  json fractions = json::object();
  for (const LikertScore s : LikertScore::all()) {
    const std::string key = (s.value() > 0 ? "+" : "") + std::to_string(s.value());
    counts[key] = r.counts[s.index()];
    fractions[key] = r.fractions[s.index()];
  }
  return json{{"total", r.total}, {"flagged", r.flagged.size()}, {"counts", counts}, {"fractions", fractions}};
}

SampleResult stratified_sample(const std::vector<FlaggedCase>& flagged, std::size_t n_per_stratum,
                               std::uint64_t seed) {
  SampleResult out;
  for (const LikertScore stratum : {LikertScore::partial_contradiction(), LikertScore::strong_contradiction()}) {
    std::vector<const FlaggedCase*> pool;
    for (const auto& f : flagged) {
      if (f.verdict == stratum) pool.push_back(&f);
    }
    const std::string name = stratum == LikertScore::partial_contradiction() ? "partial" : "strong";
    if (pool.empty()) {
      out.warnings.push_back("stratum " + name + " is empty");
      continue;
    }
    if (pool.size() < n_per_stratum) {
      out.warnings.push_back("stratum " + name + " has " + std::to_string(pool.size()) + " cases, fewer than " +
                             std::to_string(n_per_stratum));
    }
    std::mt19937_64 rng(seed ^ static_cast<std::uint64_t>(-stratum.value()));
    for (std::size_t i = pool.size(); i > 1; --i) {
      std::swap(pool[i - 1], pool[rng() % i]);
    }
    const std::size_t take = std::min(n_per_stratum, pool.size());
    for (std::size_t i = 0; i < take; ++i) out.cases.push_back(*pool[i]);
  }
  return out;
}

json to_json(const GuidelineRun& r) {
  return json{{"documents", r.documents},
              {"statements", r.statements},
              {"excluded",
               {{"multi_citation", r.multi_citation},
                {"missing_pmid", r.missing_pmid},
                {"not_worthy", r.not_worthy},
                {"unparseable_worthiness", r.unparseable_worthiness},
                {"article_missing", r.article_missing},
                {"unscorable", r.unscorable},
                {"gateway_errors", r.gateway_errors}}},
              {"distribution", to_json(r.flags)}};
}

GuidelineRun audit_guidelines(const std::vector<json>& documents, const BiocOptions& options,
                              const GuidelineServices& services) {
  if (!services.gateway || !services.store) throw Error(ErrorCode::InvalidArgument, "guideline services are incomplete");
  const auto& gw = *services.gateway;
  GuidelineRun run;
  run.documents = documents.size();

  std::vector<CitationStatement> statements;
  for (const json& doc : documents) {
    ExtractResult ex = extract_citation_statements(doc, options);
    run.multi_citation += ex.multi_citation;
    run.missing_pmid += ex.missing_pmid;
    for (auto& s : ex.statements) statements.push_back(std::move(s));
  }
  run.statements = statements.size();

  std::vector<gateway::ChatRequest> worth_reqs;
  for (const auto& s : statements) {
    worth_reqs.push_back(gateway::make_request(services.filter_model, prompts::worthiness_check(s.sentence)));
  }
  const auto worth = gw.complete_batch(worth_reqs, services.parallelism);

  std::vector<const CitationStatement*> keep;
  std::vector<gateway::ChatRequest> verify_reqs;
  for (std::size_t i = 0; i < statements.size(); ++i) {
    const auto* resp = std::get_if<gateway::ChatResponse>(&worth[i]);
    if (resp == nullptr) {
      ++run.gateway_errors;
      continue;
    }
    bool worthy = false;
    try {
      worthy = parse_worthiness(resp->content);
    } catch (const Error&) {
      ++run.unparseable_worthiness;
      continue;
    }
    if (!worthy) {
      ++run.not_worthy;
      continue;
    }
    const Article* article = services.store->find(statements[i].cited_pmid);
    if (article == nullptr) {
      ++run.article_missing;
      continue;
    }
    keep.push_back(&statements[i]);
    verify_reqs.push_back(gateway::make_request(
        services.verifier_model, prompts::verification(prompts::article_text(*article), statements[i].sentence)));
  }
  const auto verified = gw.complete_batch(verify_reqs, services.parallelism);

  std::vector<std::pair<CitationStatement, VerificationReport>> verdicts;
  for (std::size_t i = 0; i < keep.size(); ++i) {
    const auto* resp = std::get_if<gateway::ChatResponse>(&verified[i]);
    if (resp == nullptr) {
      ++run.gateway_errors;
      continue;
    }
    try {
      verdicts.emplace_back(*keep[i], parse_verification_output(resp->content));
    } catch (const Error&) {
      ++run.unscorable;
    }
  }
  run.flags = flag_contradictions(verdicts);
  return run;
}

}  // namespace medv::guide
