#include <gtest/gtest.h>

#include "medverify/error.hpp"
#include "medverify/types.hpp"
#include "medverify/verdict.hpp"

namespace medv {
namespace {

ErrorCode code_of(std::string_view raw) {
  try {
    parse_verification_output(raw);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "parsed: " << raw;
  return ErrorCode::Io;
}

TEST(LikertScore, RangeIsClosed) {
  EXPECT_FALSE(LikertScore::from_int(-3));
  EXPECT_FALSE(LikertScore::from_int(3));
  for (int v = -2; v <= 2; ++v) EXPECT_EQ(LikertScore::from_int(v)->value(), v);
  EXPECT_THROW(LikertScore::of(7), Error);
}

TEST(LikertScore, IndexIsZeroBasedFromStrongContradiction) {
  EXPECT_EQ(LikertScore::strong_contradiction().index(), 0u);
  EXPECT_EQ(LikertScore::strong_agreement().index(), 4u);
}

TEST(CoarseLabel, MapsFiveToThree) {
  EXPECT_EQ(coarse_label(LikertScore::of(2)), ThreeWayLabel::Support);
  EXPECT_EQ(coarse_label(LikertScore::of(1)), ThreeWayLabel::Support);
  EXPECT_EQ(coarse_label(LikertScore::of(0)), ThreeWayLabel::NEI);
  EXPECT_EQ(coarse_label(LikertScore::of(-1)), ThreeWayLabel::Contradict);
  EXPECT_EQ(coarse_label(LikertScore::of(-2)), ThreeWayLabel::Contradict);
}

TEST(CoarseLabel, SupportedMatchesSupportLabel) {
  for (auto s : LikertScore::all()) EXPECT_EQ(is_supported(s), coarse_label(s) == ThreeWayLabel::Support);
}

TEST(ThreeWayLabel, ParsesItsOwnNames) {
  for (auto l : {ThreeWayLabel::Support, ThreeWayLabel::NEI, ThreeWayLabel::Contradict}) {
    EXPECT_EQ(parse_three_way_label(to_string(l)), l);
  }
}

TEST(ParseVerification, WellFormed) {
  const auto r = parse_verification_output("<think>The trial reports it.</think><score>2</score>");
  EXPECT_EQ(r.rationale, "The trial reports it.");
  EXPECT_EQ(r.score.value(), 2);
}

TEST(ParseVerification, AllowsWhitespaceBetweenBlocks) {
  const auto r = parse_verification_output("  \n<think>\n r \n</think>\n\n<score> -1 </score>\n");
  EXPECT_EQ(r.rationale, "r");
  EXPECT_EQ(r.score.value(), -1);
}

TEST(ParseVerification, LeadingPlusSign) {
  EXPECT_EQ(parse_verification_output("<think>r</think><score>+1</score>").score.value(), 1);
}

TEST(ParseVerification, FormatErrors) {
  EXPECT_EQ(code_of("<score>1</score>"), ErrorCode::Format);
  EXPECT_EQ(code_of("<score>1</score><think>r</think>"), ErrorCode::Format);
  EXPECT_EQ(code_of("<think>r</think>"), ErrorCode::Format);
  EXPECT_EQ(code_of("<think>r</think><score>1</score> trailing"), ErrorCode::Format);
  EXPECT_EQ(code_of("prefix <think>r</think><score>1</score>"), ErrorCode::Format);
  EXPECT_EQ(code_of("<think>   </think><score>1</score>"), ErrorCode::Format);
  EXPECT_EQ(code_of("<think>r<score>1</score>"), ErrorCode::Format);
  EXPECT_EQ(code_of(""), ErrorCode::Format);
}

TEST(ParseVerification, ScoreErrors) {
  EXPECT_EQ(code_of("<think>r</think><score>3</score>"), ErrorCode::Score);
  EXPECT_EQ(code_of("<think>r</think><score>two</score>"), ErrorCode::Score);
  EXPECT_EQ(code_of("<think>r</think><score>1.5</score>"), ErrorCode::Score);
  EXPECT_EQ(code_of("<think>r</think><score></score>"), ErrorCode::Score);
}

TEST(ParseVerification, RationaleStopsAtFirstCloseTag) {
  EXPECT_EQ(code_of("<think>a</think>b</think><score>1</score>"), ErrorCode::Format);
}

TEST(RenderVerification, RoundTrips) {
  const VerificationReport r{"Step one.\nStep two.", LikertScore::of(-2)};
  EXPECT_EQ(parse_verification_output(render_verification_output(r)), r);
}

TEST(RenderVerification, RejectsUnrenderableRationale) {
  EXPECT_THROW(render_verification_output({"", LikertScore::of(0)}), Error);
  EXPECT_THROW(render_verification_output({" padded", LikertScore::of(0)}), Error);
  EXPECT_THROW(render_verification_output({"a</think>b", LikertScore::of(0)}), Error);
}

}  // namespace
}  // namespace medv
