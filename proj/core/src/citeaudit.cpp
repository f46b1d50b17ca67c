#include "medverify/citeaudit.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <regex>
#include <sstream>

#include <httplib.h>

#include "medverify/error.hpp"
#include "medverify/http_util.hpp"
#include "medverify/parallel.hpp"
#include "medverify/prompts.hpp"
#include "medverify/verdict.hpp"

namespace medv::cite {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

std::optional<Pmid> to_pmid(std::string_view digits) {
  Pmid v = 0;
  const auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
  if (ec != std::errc() || p != digits.data() + digits.size() || v <= 0) return std::nullopt;
  return v;
}

}  // namespace

std::string_view to_string(Style s) noexcept {
  switch (s) {
    case Style::NLM: return "nlm";
    case Style::AMA: return "ama";
    case Style::Vancouver: return "vancouver";
    case Style::APA: return "apa";
    case Style::MLA: return "mla";
    case Style::PMID: return "pmid";
    case Style::DOI: return "doi";
    case Style::Unknown: return "unknown";
  }
  return "unknown";
}

Style parse_style(std::string_view name) {
  const std::string key = lower(trim(name));
  for (Style s : {Style::NLM, Style::AMA, Style::Vancouver, Style::APA, Style::MLA, Style::PMID, Style::DOI,
                  Style::Unknown}) {
    if (key == to_string(s)) return s;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown citation style '" + std::string(name) + "'", "style");
}

std::vector<ClaimCitation> parse_extraction_json(std::string_view model_output, Style hint) {
  std::string_view text = model_output;
  if (const auto fence = text.find("```"); fence != std::string_view::npos) {
    std::size_t pos = fence + 3;
    while (pos < text.size() && (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '-' ||
                                 text[pos] == '_')) {
      ++pos;
    }
    const auto close = text.find("```", pos);
    text = text.substr(pos, close == std::string_view::npos ? std::string_view::npos : close - pos);
  }

  const auto open = text.find('[');
  if (open == std::string_view::npos) throw Error(ErrorCode::Json, "no JSON array in extraction output");
  std::size_t depth = 0, end = std::string_view::npos;
  bool in_string = false, escaped = false;
  for (std::size_t i = open; i < text.size() && end == std::string_view::npos; ++i) {
    const char c = text[i];
    if (in_string) {
      if (escaped) escaped = false;
      else if (c == '\\') escaped = true;
      else if (c == '"') in_string = false;
    } else if (c == '"') {
      in_string = true;
    } else if (c == '[' || c == '{') {
      ++depth;
    } else if (c == ']' || c == '}') {
      if (--depth == 0) end = i;
    }
  }
  if (end == std::string_view::npos) throw Error(ErrorCode::Json, "unterminated JSON array in extraction output");

  const json parsed = json::parse(text.substr(open, end - open + 1), nullptr, false);
  if (parsed.is_discarded() || !parsed.is_array()) throw Error(ErrorCode::Json, "extraction output is not a JSON array");

  std::vector<ClaimCitation> out;
  out.reserve(parsed.size());
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    const json& item = parsed[i];
    const std::string where = "[" + std::to_string(i) + "]";
    if (!item.is_object()) throw Error(ErrorCode::Schema, "expected an object", where);
    for (const char* key : {"claim", "citation"}) {
      if (!item.contains(key) || !item[key].is_string() || trim(item[key].get_ref<const std::string&>()).empty()) {
        throw Error(ErrorCode::Schema, std::string("missing or empty \"") + key + "\"", where + "." + key);
      }
    }
    out.push_back({std::string(trim(item["claim"].get_ref<const std::string&>())),
                   std::string(trim(item["citation"].get_ref<const std::string&>())), hint});
  }
  return out;
}

namespace {

std::string clean_citation(std::string_view raw) {
  static const std::regex leading(R"(^(\[\d+\]\s*|\d+[.)]\s+))");
  static const std::regex spaces(R"(\s+)");
  std::string s = std::regex_replace(std::string(trim(raw)), spaces, " ");
  for (;;) {
    const std::string before = s;
    s = std::regex_replace(s, leading, "", std::regex_constants::format_first_only);
    while (!s.empty() && (s.back() == '.' || s.back() == ';' || s.back() == ',' || s.back() == ' ')) s.pop_back();
    s = std::string(trim(s));
    if (s == before) return s;
  }
}

std::string extract_pmid(std::string_view raw, const std::string& cleaned) {
  static const std::regex marker(R"(pmid\s*[:=#]?\s*(\d+))", std::regex::icase);
  static const std::regex standalone(R"((^|[^0-9])([0-9]{6,9})([^0-9]|$))");
  const std::string text(raw);
  std::smatch m;
  if (std::regex_search(text, m, marker)) return m[1].str();
  if (all_digits(cleaned)) return cleaned;
  if (std::regex_search(text, m, standalone)) return m[2].str();
  throw Error(ErrorCode::NoIdentifier, "no PMID in citation", std::string(raw));
}

std::string extract_doi(std::string_view raw) {
  static const std::regex doi(R"(10\.\d{4,9}/\S+)");
  const std::string text(raw);
  std::smatch m;
  if (!std::regex_search(text, m, doi)) throw Error(ErrorCode::NoIdentifier, "no DOI in citation", text);
  std::string id = m.str();
  for (;;) {
    const char c = id.back();
    if (c == '.' || c == ';' || c == ',') {
      id.pop_back();
    } else if ((c == ')' && std::count(id.begin(), id.end(), '(') < std::count(id.begin(), id.end(), ')')) ||
               (c == ']' && std::count(id.begin(), id.end(), '[') < std::count(id.begin(), id.end(), ']'))) {
      id.pop_back();
    } else {
      return id;
    }
  }
}

}  // namespace

std::string normalize_citation(std::string_view raw, Style hint) {
  if (trim(raw).empty()) throw Error(ErrorCode::EmptyText, "empty citation");
  const std::string cleaned = clean_citation(raw);
  switch (hint) {
    case Style::PMID: return extract_pmid(raw, cleaned);
    case Style::DOI: return extract_doi(raw);
    default: break;
  }
  if (cleaned.empty()) throw Error(ErrorCode::EmptyText, "citation is only enumeration or punctuation", std::string(raw));
  return cleaned;
}

// ---------------------------------------------------------------------------

namespace {

json http_get_json(const gateway::HttpSettings& settings, const std::string& path_and_query) {
  const SplitUrl url = split_base_url(settings.base_url);
  httplib::Client client(url.origin);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(settings.timeout).count();
  client.set_connection_timeout(secs);
  client.set_read_timeout(secs);
  httplib::Headers headers;
  if (!settings.api_key.empty()) headers.emplace("api_key", settings.api_key);
  auto res = client.Get(url.path_prefix + path_and_query, headers);
  if (!res) throw Error(ErrorCode::Transport, "request failed: " + httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300) {
    throw Error(ErrorCode::Transport, "service returned HTTP " + std::to_string(res->status));
  }
  json body = json::parse(res->body, nullptr, false);
  if (body.is_discarded()) throw Error(ErrorCode::Transport, "service returned invalid JSON");
  return body;
}

std::optional<Pmid> pmid_value(const json& v) {
  if (v.is_number_integer()) {
    const auto p = v.get<Pmid>();
    return p > 0 ? std::optional<Pmid>(p) : std::nullopt;
  }
  if (v.is_string() && all_digits(v.get_ref<const std::string&>())) return to_pmid(v.get_ref<const std::string&>());
  return std::nullopt;
}

}  // namespace

HttpCitationMatcher::HttpCitationMatcher(gateway::HttpSettings settings) : settings_(std::move(settings)) {
  split_base_url(settings_.base_url);
}

std::vector<Pmid> HttpCitationMatcher::match(std::string_view citation) const {
  const json body = http_get_json(settings_, "/esearch.fcgi?db=pubmed&retmode=json&term=" + url_encode(citation));
  std::vector<Pmid> out;
  const json* ids = nullptr;
  if (body.contains("esearchresult") && body["esearchresult"].contains("idlist")) ids = &body["esearchresult"]["idlist"];
  if (ids == nullptr || !ids->is_array()) throw Error(ErrorCode::Transport, "matcher response lacks esearchresult.idlist");
  for (const json& id : *ids) {
    if (auto p = pmid_value(id)) out.push_back(*p);
  }
  return out;
}

HttpIdConverter::HttpIdConverter(gateway::HttpSettings settings) : settings_(std::move(settings)) {
  split_base_url(settings_.base_url);
}

std::optional<Pmid> HttpIdConverter::convert(std::string_view doi) const {
  const json body = http_get_json(settings_, "/idconv/v1.0/?ids=" + url_encode(doi) + "&format=json");
  if (!body.contains("records") || !body["records"].is_array()) {
    throw Error(ErrorCode::Transport, "ID converter response lacks records");
  }
  if (body["records"].empty() || !body["records"][0].contains("pmid")) return std::nullopt;
  return pmid_value(body["records"][0]["pmid"]);
}

std::string_view to_string(MapMethod m) noexcept {
  switch (m) {
    case MapMethod::Direct: return "direct";
    case MapMethod::CitationMatcher: return "citation-matcher";
    case MapMethod::IdConverter: return "id-converter";
  }
  return "citation-matcher";
}

PmidMapping map_to_pmid(std::string_view citation, Style hint, const corpus::ArticleStore& store,
                        const CitationMatcher& matcher, const IdConverter& idconv) {
  PmidMapping m;
  if (hint == Style::PMID) {
    m.method = MapMethod::Direct;
    const auto pmid = all_digits(citation) ? to_pmid(citation) : std::nullopt;
    if (!pmid) m.reason = "no-identifier";
    else if (!store.contains(*pmid)) m.reason = "unknown-pmid";
    else m.pmid = pmid;
    return m;
  }
  if (hint == Style::DOI) {
    m.method = MapMethod::IdConverter;
    try {
      m.pmid = idconv.convert(citation);
      if (!m.pmid) m.reason = "no-match";
    } catch (const Error&) {
      m.reason = "service-error";
    }
    return m;
  }
  m.method = MapMethod::CitationMatcher;
  try {
    m.candidates = matcher.match(citation);
    if (m.candidates.empty()) m.reason = "no-match";
    else m.pmid = m.candidates.front();
  } catch (const Error&) {
    m.reason = "service-error";
  }
  return m;
}

PmidMapping resolve_citation(std::string_view raw, Style hint, const corpus::ArticleStore& store,
                             const CitationMatcher& matcher, const IdConverter& idconv) {
  std::string normalized;
  try {
    normalized = normalize_citation(raw, hint);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoIdentifier && e.code() != ErrorCode::EmptyText) throw;
    PmidMapping m;
    m.method = hint == Style::PMID ? MapMethod::Direct
               : hint == Style::DOI ? MapMethod::IdConverter
                                    : MapMethod::CitationMatcher;
    m.reason = "no-identifier";
    return m;
  }
  return map_to_pmid(normalized, hint, store, matcher, idconv);
}

// ---------------------------------------------------------------------------

std::string_view to_string(VerifyStatus s) noexcept {
  switch (s) {
    case VerifyStatus::NotMapped: return "not-mapped";
    case VerifyStatus::ArticleMissing: return "article-missing";
    case VerifyStatus::Unscorable: return "unscorable";
    case VerifyStatus::ServiceError: return "service-error";
    case VerifyStatus::Verified: return "verified";
  }
  return "not-mapped";
}

json to_json(const AuditRecord& r) {
  json mapping{{"method", to_string(r.mapping.method)}, {"candidates", r.mapping.candidates}};
  if (r.mapping.pmid) mapping["pmid"] = *r.mapping.pmid;
  else mapping["reason"] = r.mapping.reason;
  json j{{"answer_id", r.answer_id},
         {"claim", r.claim},
         {"citation", r.citation},
         {"mapping", std::move(mapping)},
         {"status", to_string(r.status)}};
  j["verdict"] = r.verdict ? json(r.verdict->value()) : json(nullptr);
  if (!r.rationale.empty()) j["rationale"] = r.rationale;
  return j;
}

namespace {

Metric metric_of(std::vector<double> values, const bench::BootstrapSettings& bs) {
  Metric m;
  if (values.empty()) return m;
  m.value = bench::mean(values);
  m.ci = bench::bootstrap_ci(values, bs);
  return m;
}

json metric_json(const Metric& m) {
  json j{{"value", m.value ? json(*m.value) : json(nullptr)}};
  j["ci"] = m.ci ? json::array({m.ci->lo, m.ci->hi}) : json(nullptr);
  return j;
}

}  // namespace

AuditMetrics compute_metrics(const std::vector<AnswerAudit>& answers, const bench::BootstrapSettings& bootstrap) {
  if (answers.empty()) throw Error(ErrorCode::EmptySet, "no answers to audit");
  AuditMetrics m;
  m.answers = answers.size();
  std::vector<double> per_answer_pairs, per_answer_supported, mapped_flags, pmids, supported_flags, hallucinated_flags;
  for (const auto& a : answers) {
    std::size_t supported_here = 0;
    for (const auto& r : a.records) {
      mapped_flags.push_back(r.mapping.mapped() ? 1.0 : 0.0);
      if (r.mapping.mapped()) pmids.push_back(static_cast<double>(*r.mapping.pmid));
      if (r.verdict) {
        const bool supported = is_supported(*r.verdict);
        supported_flags.push_back(supported ? 1.0 : 0.0);
        hallucinated_flags.push_back(supported ? 0.0 : 1.0);
        supported_here += supported ? 1 : 0;
      }
    }
    per_answer_pairs.push_back(static_cast<double>(a.records.size()));
    per_answer_supported.push_back(static_cast<double>(supported_here));
  }
  m.pairs = mapped_flags.size();
  m.mapped = pmids.size();
  m.verified = supported_flags.size();
  m.claims_per_answer = metric_of(std::move(per_answer_pairs), bootstrap);
  m.mapping_rate = metric_of(std::move(mapped_flags), bootstrap);
  m.avg_pmid = metric_of(std::move(pmids), bootstrap);
  m.hallucination_rate = metric_of(std::move(hallucinated_flags), bootstrap);
  m.supported_fraction = metric_of(std::move(supported_flags), bootstrap);
  m.supported_count_per_answer = metric_of(std::move(per_answer_supported), bootstrap);
  return m;
}

json to_json(const AuditMetrics& m) {
  return json{{"answers", m.answers},
              {"pairs", m.pairs},
              {"mapped", m.mapped},
              {"verified", m.verified},
              {"claims_per_answer", metric_json(m.claims_per_answer)},
              {"mapping_rate", metric_json(m.mapping_rate)},
              {"avg_pmid", metric_json(m.avg_pmid)},
              {"hallucination_rate", metric_json(m.hallucination_rate)},
              {"supported_fraction", metric_json(m.supported_fraction)},
              {"supported_count_per_answer", metric_json(m.supported_count_per_answer)}};
}

// ---------------------------------------------------------------------------

AuditRun audit_answers(const std::vector<AnswerText>& answers, Style hint, const AuditServices& services) {
  if (!services.gateway || !services.store || !services.matcher || !services.idconv) {
    throw Error(ErrorCode::InvalidArgument, "audit services are incomplete");
  }
  const auto& gw = *services.gateway;

  std::vector<gateway::ChatRequest> extract;
  extract.reserve(answers.size());
  for (const auto& a : answers) {
    extract.push_back(gateway::make_request(services.extractor_model, prompts::claim_extraction(a.text)));
  }
  const auto extracted = gw.complete_batch(extract, services.parallelism);

  AuditRun run;
  for (std::size_t i = 0; i < answers.size(); ++i) {
    const auto* resp = std::get_if<gateway::ChatResponse>(&extracted[i]);
    if (resp == nullptr) {
      run.extraction_failures.push_back(answers[i].answer_id);
      continue;
    }
    try {
      AnswerAudit audit{answers[i].answer_id, {}};
      for (auto& cc : parse_extraction_json(resp->content, hint)) {
        AuditRecord r;
        r.answer_id = answers[i].answer_id;
        r.claim = std::move(cc.claim);
        r.citation = std::move(cc.citation);
        audit.records.push_back(std::move(r));
      }
      run.answers.push_back(std::move(audit));
    } catch (const Error&) {
      run.extraction_failures.push_back(answers[i].answer_id);
    }
  }

  std::vector<AuditRecord*> flat;
  for (auto& a : run.answers) {
    for (auto& r : a.records) flat.push_back(&r);
  }
  parallel_for(flat.size(), services.parallelism, [&](std::size_t i) {
    flat[i]->mapping = resolve_citation(flat[i]->citation, hint, *services.store, *services.matcher, *services.idconv);
  });

  std::vector<gateway::ChatRequest> verify;
  std::vector<AuditRecord*> pending;
  for (AuditRecord* r : flat) {
    if (!r->mapping.mapped()) {
      r->status = VerifyStatus::NotMapped;
      continue;
    }
    const Article* article = services.store->find(*r->mapping.pmid);
    if (article == nullptr) {
      r->status = VerifyStatus::ArticleMissing;
      continue;
    }
    verify.push_back(gateway::make_request(services.verifier_model,
                                           prompts::verification(prompts::article_text(*article), r->claim)));
    pending.push_back(r);
  }
  const auto verdicts = gw.complete_batch(verify, services.parallelism);
  for (std::size_t i = 0; i < pending.size(); ++i) {
    AuditRecord& r = *pending[i];
    const auto* resp = std::get_if<gateway::ChatResponse>(&verdicts[i]);
    if (resp == nullptr) {
      r.status = VerifyStatus::ServiceError;
      continue;
    }
    try {
      const VerificationReport report = parse_verification_output(resp->content);
      r.status = VerifyStatus::Verified;
      r.verdict = report.score;
      r.rationale = report.rationale;
    } catch (const Error&) {
      r.status = VerifyStatus::Unscorable;
    }
  }
  return run;
}

std::vector<AnswerText> load_answers(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) throw Error(ErrorCode::Io, "answers directory not found", dir.string());
  std::vector<AnswerText> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
    std::ifstream in(entry.path(), std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot read answer", entry.path().string());
    std::ostringstream ss;
    ss << in.rdbuf();
    out.push_back({entry.path().stem().string(), ss.str()});
  }
  std::sort(out.begin(), out.end(), [](const AnswerText& a, const AnswerText& b) { return a.answer_id < b.answer_id; });
  return out;
}

}  // namespace medv::cite
