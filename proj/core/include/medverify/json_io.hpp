#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "medverify/types.hpp"

namespace medv {

using json = nlohmann::json;

// Canonical JSON for the shared domain types. Field names are fixed:
// pmid, title, abstract, id, text, source_pmid, polarity, rationale, score.
void to_json(json& j, const LikertScore& s);
// Throws Schema when not an integer, Score when off the scale.
LikertScore score_from_json(const json& j);
void to_json(json& j, const Article& a);
void from_json(const json& j, Article& a);
void to_json(json& j, const Claim& c);
void from_json(const json& j, Claim& c);
void to_json(json& j, const VerificationReport& r);
void from_json(const json& j, VerificationReport& r);

// Typed field access that reports the missing or mistyped key as a SchemaError.
const json& require(const json& obj, std::string_view key);
std::string require_string(const json& obj, std::string_view key);
std::int64_t require_int(const json& obj, std::string_view key);
// Accepts an integer or a decimal-digit string (PubMed services return PMIDs as strings).
std::optional<Pmid> as_pmid(const json& value);

// One JSON value per line, rendered with sorted keys.
std::string dump_line(const json& value);

// Inter-stage files start with a {"schema":..., "version":...} header line.
struct JsonlHeader {
  std::string schema;
  int version = 1;
};

bool is_header_record(const json& value);

struct JsonlFile {
  std::optional<JsonlHeader> header;
  std::vector<json> records;
};

// Reads a JSONL file. A leading header line is split off; if `expected_schema`
// is given the header must be present and match. Blank lines are skipped.
// Throws Error(Io) when unreadable and Error(Json) naming the line on bad JSON.
JsonlFile read_jsonl(const std::filesystem::path& path,
                     std::optional<std::string_view> expected_schema = std::nullopt);

// Line-oriented reader for files where malformed lines are data, not errors
// (prediction files). Header line is dropped.
std::vector<std::string> read_data_lines(const std::filesystem::path& path);

// Writes to "<path>.tmp" and renames over `path` on commit(); an uncommitted
// writer removes its temp file.
class JsonlWriter {
 public:
  JsonlWriter(std::filesystem::path path, std::optional<JsonlHeader> header);
  ~JsonlWriter();
  JsonlWriter(const JsonlWriter&) = delete;
  JsonlWriter& operator=(const JsonlWriter&) = delete;

  void write(const json& record);
  void commit();
  std::size_t count() const noexcept { return count_; }

 private:
  std::filesystem::path path_;
  std::filesystem::path tmp_;
  std::ofstream out_;
  std::size_t count_ = 0;
  bool committed_ = false;
};

// Writes a whole JSON document atomically (pretty-printed).
void write_json_file(const std::filesystem::path& path, const json& doc);
json read_json_file(const std::filesystem::path& path);

}  // namespace medv
