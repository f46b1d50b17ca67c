#include <gtest/gtest.h>

#include "medverify/error.hpp"
#include "medverify/json_io.hpp"
#include "test_support.hpp"

namespace medv {
namespace {

using medv::testing::TempDir;
using medv::testing::read_file;
using medv::testing::write_file;

TEST(JsonIo, ArticleRoundTrip) {
  const Article a{12345, "T", "A"};
  EXPECT_EQ(json(a).get<Article>(), a);
}

TEST(JsonIo, PmidAcceptsDigitStrings) {
  EXPECT_EQ(as_pmid(json("31452104")), 31452104);
  EXPECT_EQ(as_pmid(json(7)), 7);
  EXPECT_FALSE(as_pmid(json("12a")));
  EXPECT_FALSE(as_pmid(json(nullptr)));
}

TEST(JsonIo, MissingKeyNamesTheKey) {
  try {
    json{{"pmid", 1}, {"title", "t"}}.get<Article>();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Schema);
    EXPECT_EQ(e.subject(), "abstract");
  }
}

TEST(JsonIo, ScoreFromJsonChecksRange) {
  EXPECT_EQ(score_from_json(json(-2)).value(), -2);
  EXPECT_THROW(score_from_json(json(5)), Error);
  EXPECT_THROW(score_from_json(json("1")), Error);
}

TEST(JsonIo, DumpLineSortsKeys) {
  EXPECT_EQ(dump_line(json{{"b", 1}, {"a", 2}}), R"({"a":2,"b":1})");
}

TEST(JsonIo, WriterCommitsHeaderAndRecords) {
  TempDir dir;
  {
    JsonlWriter w(dir / "x.jsonl", JsonlHeader{"things", 1});
    w.write(json{{"k", 1}});
    w.write(json{{"k", 2}});
    EXPECT_EQ(w.count(), 2u);
    EXPECT_FALSE(std::filesystem::exists(dir / "x.jsonl"));
    w.commit();
  }
  EXPECT_EQ(read_file(dir / "x.jsonl"), "{\"schema\":\"things\",\"version\":1}\n{\"k\":1}\n{\"k\":2}\n");
  const auto f = read_jsonl(dir / "x.jsonl", "things");
  ASSERT_TRUE(f.header);
  EXPECT_EQ(f.records.size(), 2u);
}

TEST(JsonIo, UncommittedWriterLeavesNothing) {
  TempDir dir;
  { JsonlWriter w(dir / "x.jsonl", std::nullopt); w.write(json(1)); }
  EXPECT_TRUE(std::filesystem::is_empty(dir.path()));
}

TEST(JsonIo, SchemaMismatchIsRejected) {
  TempDir dir;
  write_file(dir / "x.jsonl", "{\"schema\":\"claims\",\"version\":1}\n{}\n");
  EXPECT_THROW(read_jsonl(dir / "x.jsonl", "pairs"), Error);
}

TEST(JsonIo, BadLineReportsLineNumber) {
  TempDir dir;
  write_file(dir / "x.jsonl", "{}\n{oops\n");
  try {
    read_jsonl(dir / "x.jsonl");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Json);
    EXPECT_NE(std::string(e.what()).find('2'), std::string::npos);
  }
}

TEST(JsonIo, MissingFileIsIoError) {
  try {
    read_jsonl("/nonexistent/medv.jsonl");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Io);
  }
}

}  // namespace
}  // namespace medv
