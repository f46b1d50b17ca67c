#include <gtest/gtest.h>

#include "medverify/prompts.hpp"

namespace medv::prompts {
namespace {

bool contains(std::string_view hay, std::string_view needle) { return hay.find(needle) != std::string_view::npos; }

TEST(Prompts, ArticleText) { EXPECT_EQ(article_text("T", "A"), "Title: T\nAbstract: A"); }

TEST(Prompts, ClaimGenerationByPolarity) {
  const Article a{1, "Title here", "Abstract here"};
  const auto s = claim_generation(a, Polarity::SupportedBy);
  const auto r = claim_generation(a, Polarity::RefutedBy);
  EXPECT_TRUE(contains(s.system, "can be supported by the provided article"));
  EXPECT_TRUE(contains(r.system, "can be refuted by the provided article"));
  EXPECT_TRUE(contains(r.system, "Avoid using simple negative words"));
  EXPECT_FALSE(contains(s.system, "Avoid using simple negative words"));
  EXPECT_EQ(s.user, "Here is the article:\nTitle: Title here\nAbstract: Abstract here");
}

TEST(Prompts, VerificationUserLayout) {
  const auto p = verification("Title: T\nAbstract: A", "C");
  EXPECT_EQ(p.user, "Article:\nTitle: T\nAbstract: A\n\nClaim:\nC");
  EXPECT_TRUE(contains(p.system, "<score>[the integer score only, i.e., -2, -1, 0, 1, or 2]</score>"));
  EXPECT_TRUE(contains(p.system, "five-point scale"));
}

TEST(Prompts, QuestionConversion) {
  const auto p = question_conversion("Does X cause Y?");
  EXPECT_TRUE(contains(p.user, "assuming the answer is"));
  EXPECT_TRUE(contains(p.user, "Question: Does X cause Y?"));
}

TEST(Prompts, ExtractionAsksForStrictJson) {
  const auto p = claim_extraction("answer text");
  EXPECT_TRUE(contains(p.system, "strict JSON list"));
  EXPECT_EQ(p.user, "answer text");
}

TEST(Prompts, Worthiness) {
  const auto p = worthiness_check("X reduces Y.");
  EXPECT_TRUE(contains(p.system, "can be fact-checked"));
  EXPECT_TRUE(contains(p.user, "X reduces Y."));
}

}  // namespace
}  // namespace medv::prompts
