#include "medverify/json_io.hpp"

#include <cctype>

#include "medverify/error.hpp"
#include "medverify/verdict.hpp"

namespace medv {

namespace {

[[noreturn]] void schema_error(std::string_view key, const std::string& what) {
  throw Error(ErrorCode::Schema, what, std::string(key));
}

bool all_digits(std::string_view s) {
  if (s.empty() || s.size() > 18) return false;
  for (char c : s) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

}  // namespace

const json& require(const json& obj, std::string_view key) {
  if (!obj.is_object()) schema_error(key, "record is not a JSON object");
  auto it = obj.find(std::string(key));
  if (it == obj.end()) schema_error(key, "missing key");
  return *it;
}

std::string require_string(const json& obj, std::string_view key) {
  const json& v = require(obj, key);
  if (!v.is_string()) schema_error(key, "expected a string");
  return v.get<std::string>();
}

std::int64_t require_int(const json& obj, std::string_view key) {
  const json& v = require(obj, key);
  if (!v.is_number_integer()) schema_error(key, "expected an integer");
  return v.get<std::int64_t>();
}

std::optional<Pmid> as_pmid(const json& value) {
  if (value.is_number_integer()) return value.get<std::int64_t>();
  if (value.is_string()) {
    const std::string s(trim(value.get<std::string>()));
    if (all_digits(s)) return std::stoll(s);
  }
  return std::nullopt;
}

void to_json(json& j, const LikertScore& s) { j = s.value(); }

LikertScore score_from_json(const json& j) {
  if (!j.is_number_integer()) throw Error(ErrorCode::Schema, "score must be an integer", "score");
  return LikertScore::of(j.get<long long>());
}

void to_json(json& j, const Article& a) {
  j = json{{"pmid", a.pmid}, {"title", a.title}, {"abstract", a.abstract}};
}

void from_json(const json& j, Article& a) {
  const auto pmid = as_pmid(require(j, "pmid"));
  if (!pmid || *pmid <= 0) schema_error("pmid", "expected a positive integer");
  a.pmid = *pmid;
  a.title = require_string(j, "title");
  a.abstract = require_string(j, "abstract");
}

void to_json(json& j, const Claim& c) {
  j = json{{"id", c.id},
           {"text", c.text},
           {"source_pmid", c.source_pmid},
           {"polarity", std::string(to_string(c.polarity))}};
}

void from_json(const json& j, Claim& c) {
  c.id = require_string(j, "id");
  c.text = require_string(j, "text");
  c.source_pmid = require_int(j, "source_pmid");
  c.polarity = parse_polarity(require_string(j, "polarity"));
}

void to_json(json& j, const VerificationReport& r) {
  j = json{{"rationale", r.rationale}, {"score", r.score.value()}};
}

void from_json(const json& j, VerificationReport& r) {
  r.rationale = require_string(j, "rationale");
  r.score = score_from_json(require(j, "score"));
}

std::string dump_line(const json& value) {
  return value.dump(-1, ' ', false, json::error_handler_t::replace);
}

bool is_header_record(const json& value) {
  return value.is_object() && value.size() == 2 && value.contains("schema") &&
         value.contains("version") && value["schema"].is_string() &&
         value["version"].is_number_integer();
}

JsonlFile read_jsonl(const std::filesystem::path& path,
                     std::optional<std::string_view> expected_schema) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open for reading", path.string());
  JsonlFile file;
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json value;
    try {
      value = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::Json, "line " + std::to_string(line_no) + ": " + e.what(),
                  path.string());
    }
    if (first && is_header_record(value)) {
      file.header = JsonlHeader{value["schema"].get<std::string>(), value["version"].get<int>()};
    } else {
      file.records.push_back(std::move(value));
    }
    first = false;
  }
  if (in.bad()) throw Error(ErrorCode::Io, "read failed", path.string());
  if (expected_schema) {
    if (!file.header || file.header->schema != *expected_schema) {
      throw Error(ErrorCode::Schema,
                  "expected a '" + std::string(*expected_schema) + "' header record",
                  path.string());
    }
  }
  return file;
}

std::vector<std::string> read_data_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open for reading", path.string());
  std::vector<std::string> lines;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (first) {
      first = false;
      const json maybe = json::parse(line, nullptr, false);
      if (!maybe.is_discarded() && is_header_record(maybe)) continue;
    }
    lines.push_back(std::move(line));
  }
  // A trailing newline is not an extra record.
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  return lines;
}

JsonlWriter::JsonlWriter(std::filesystem::path path, std::optional<JsonlHeader> header)
    : path_(std::move(path)), tmp_(path_.string() + ".tmp") {
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  out_.open(tmp_, std::ios::out | std::ios::trunc | std::ios::binary);
  if (!out_) throw Error(ErrorCode::Io, "cannot open for writing", tmp_.string());
  if (header) {
    out_ << dump_line(json{{"schema", header->schema}, {"version", header->version}}) << '\n';
  }
}

JsonlWriter::~JsonlWriter() {
  if (!committed_) {
    out_.close();
    std::error_code ec;
    std::filesystem::remove(tmp_, ec);
  }
}

void JsonlWriter::write(const json& record) {
  out_ << dump_line(record) << '\n';
  ++count_;
}

void JsonlWriter::commit() {
  out_.flush();
  out_.close();
  if (!out_) throw Error(ErrorCode::Io, "write failed", tmp_.string());
  std::filesystem::rename(tmp_, path_);
  committed_ = true;
}

void write_json_file(const std::filesystem::path& path, const json& doc) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::out | std::ios::trunc | std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot open for writing", tmp.string());
    out << doc.dump(2, ' ', false, json::error_handler_t::replace) << '\n';
    if (!out) throw Error(ErrorCode::Io, "write failed", tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open for reading", path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Json, e.what(), path.string());
  }
}

}  // namespace medv
