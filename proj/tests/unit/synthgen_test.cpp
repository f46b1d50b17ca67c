#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "medverify/synthgen.hpp"
#include "medverify/verdict.hpp"
#include "test_support.hpp"

namespace medv::synth {
namespace {

using medv::testing::code_of;

const Article kArticle{4242, "Aspirin and MI", "Aspirin lowered myocardial infarction rates."};

std::vector<LikertScore> scores(std::initializer_list<int> v) {
  std::vector<LikertScore> out;
  for (int x : v) out.push_back(LikertScore::of(x));
  return out;
}

std::array<LikertScore, 3> triple(int a, int b, int c) {
  return {LikertScore::of(a), LikertScore::of(b), LikertScore::of(c)};
}

PanelVerdict member(const std::string& id, int score, const std::string& rationale) {
  return {id, VerificationReport{rationale, LikertScore::of(score)}};
}

TEST(ClaimId, Format) {
  EXPECT_EQ(claim_id(12, Polarity::SupportedBy), "12-s");
  EXPECT_EQ(claim_id(12, Polarity::RefutedBy), "12-r");
}

TEST(GenerateClaim, PassesReplyThrough) {
  auto mock = std::make_shared<gateway::MockChatBackend>(json{{"default", " Aspirin reduces MI risk.\n"}});
  gateway::Gateway gw(mock);
  const Claim c = generate_claim(gw, "m", kArticle, Polarity::SupportedBy);
  EXPECT_EQ(c.text, "Aspirin reduces MI risk.");
  EXPECT_EQ(c.polarity, Polarity::SupportedBy);
  EXPECT_EQ(c.source_pmid, 4242);
  EXPECT_EQ(c.id, "4242-s");
}

TEST(GenerateClaim, RefutedPromptAndEmptyReply) {
  EXPECT_NE(prompts::claim_generation(kArticle, Polarity::RefutedBy).system.find("Avoid using simple negative words"),
            std::string::npos);
  EXPECT_EQ(code_of([] { make_claim(kArticle, Polarity::RefutedBy, "  \n"); }), ErrorCode::EmptyClaim);
  gateway::Gateway gw(std::make_shared<gateway::MockChatBackend>(json{{"default", "x"}}));
  EXPECT_EQ(code_of([&] { generate_claim(gw, "m", Article{1, "T", ""}, Polarity::SupportedBy); }),
            ErrorCode::InvalidArgument);
}

TEST(InitialVerdict, ParsesOrMarksUnscorable) {
  const Claim claim = make_claim(kArticle, Polarity::SupportedBy, "Aspirin helps.");
  auto mock = std::make_shared<gateway::MockChatBackend>(json::parse(R"({
    "rules": [{"model": "good", "content": "<think>r</think><score>0</score>"},
              {"model": "bad", "content": "score: 0"}]})"));
  gateway::Gateway gw(mock);
  const Verdict ok = initial_verdict(gw, "good", claim, kArticle);
  ASSERT_TRUE(std::holds_alternative<VerificationReport>(ok));
  EXPECT_EQ(std::get<VerificationReport>(ok).score, LikertScore::of(0));
  const Verdict bad = initial_verdict(gw, "bad", claim, kArticle);
  ASSERT_TRUE(std::holds_alternative<Unscorable>(bad));
  EXPECT_EQ(std::get<Unscorable>(bad).reason, "FormatError");
}

TEST(InitialVerdict, PromptStartsWithArticle) {
  const Claim claim = make_claim(kArticle, Polarity::SupportedBy, "Aspirin helps.");
  const auto req = verification_request("m", claim, kArticle);
  EXPECT_EQ(req.user.rfind("Article:", 0), 0u);
  EXPECT_NE(req.user.find("Title: Aspirin and MI\nAbstract: Aspirin lowered"), std::string::npos);
  EXPECT_NE(req.user.find("Claim:"), std::string::npos);
}

TEST(ScreenControversial, Examples) {
  EXPECT_FALSE(screen_controversial(scores({2, 1, 2})));
  EXPECT_TRUE(screen_controversial(scores({2, 0, -1})));
  EXPECT_FALSE(screen_controversial(scores({0, 0})));
  EXPECT_TRUE(screen_controversial(scores({-2, -1, 0})));
  EXPECT_EQ(code_of([] { screen_controversial({}); }), ErrorCode::EmptyList);
}

TEST(Consensus, Examples) {
  EXPECT_EQ(consensus(triple(2, 2, 1)).agreed, LikertScore::of(2));
  EXPECT_FALSE(consensus(triple(2, 2, 0)).agreed);
  EXPECT_EQ(consensus(triple(0, 0, 0)).agreed, LikertScore::of(0));
  EXPECT_FALSE(consensus(triple(-1, 0, 1)).agreed);
}

TEST(Consensus, AllTriplesMatchRuleAndArePermutationInvariant) {
  for (int a = -2; a <= 2; ++a) {
    for (int b = -2; b <= 2; ++b) {
      for (int c = -2; c <= 2; ++c) {
        std::array<int, 3> v{a, b, c};
        std::optional<int> expected;
        for (int m : v) {
          if (std::count(v.begin(), v.end(), m) >= 2 &&
              std::all_of(v.begin(), v.end(), [&](int s) { return std::abs(s - m) <= 1; })) {
            expected = m;
          }
        }
        const auto got = consensus(triple(a, b, c)).agreed;
        ASSERT_EQ(got.has_value(), expected.has_value()) << a << b << c;
        if (got) EXPECT_EQ(got->value(), *expected);
        std::sort(v.begin(), v.end());
        do {
          EXPECT_EQ(consensus(triple(v[0], v[1], v[2])), consensus(triple(a, b, c)));
        } while (std::next_permutation(v.begin(), v.end()));
      }
    }
  }
}

TEST(AssembleInstance, SeededReplayPicksAgreeingRationale) {
  const Claim claim = make_claim(kArticle, Polarity::SupportedBy, "Aspirin helps.");
  const std::array<PanelVerdict, 3> panel{member("A", 1, "ra"), member("B", 0, "rb"), member("C", 1, "rc")};
  std::set<std::string> seen;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto out = assemble_instance(claim, 7, panel, seed, true);
    ASSERT_TRUE(std::holds_alternative<TrainingInstance>(out));
    const auto& t = std::get<TrainingInstance>(out);
    std::mt19937_64 rng(seed);
    const std::array<std::pair<std::string, std::string>, 2> agreeing{{{"A", "ra"}, {"C", "rc"}}};
    const auto& pick = agreeing[rng() % 2];
    EXPECT_EQ(t.rationale, pick.second);
    EXPECT_EQ(t.rationale_from, pick.first);
    EXPECT_EQ(t.score, LikertScore::of(1));
    EXPECT_TRUE(t.is_source_article);
    seen.insert(t.rationale);
    EXPECT_EQ(std::get<TrainingInstance>(assemble_instance(claim, 7, panel, seed, true)), t);
  }
  EXPECT_EQ(seen, (std::set<std::string>{"ra", "rc"}));
}

TEST(AssembleInstance, Drops) {
  const Claim claim = make_claim(kArticle, Polarity::SupportedBy, "Aspirin helps.");
  const std::array<PanelVerdict, 3> split{member("A", 2, "a"), member("B", 2, "b"), member("C", 0, "c")};
  EXPECT_EQ(std::get<Dropped>(assemble_instance(claim, 7, split, 1, false)).reason, "no-consensus");
  const std::array<PanelVerdict, 3> broken{member("A", 2, "a"), member("B", 2, "b"),
                                           PanelVerdict{"C", Unscorable{"Format"}}};
  EXPECT_EQ(std::get<Dropped>(assemble_instance(claim, 7, broken, 1, false)).reason, "unscorable");
}

TEST(TrainingInstance, JsonRoundTrip) {
  const TrainingInstance t{make_claim(kArticle, Polarity::RefutedBy, "Aspirin raises MI."), 4242, "why", LikertScore::of(-2),
                           true, "C"};
  json j = t;
  EXPECT_EQ(instance_from_json(j), t);
}

TEST(WordCount, WhitespaceSplit) {
  EXPECT_EQ(word_count("a b c"), 3u);
  EXPECT_EQ(word_count("  a\tb\n\nc  "), 3u);
  EXPECT_EQ(word_count(""), 0u);
}

TEST(DatasetStats, HandCount) {
  const Claim c = make_claim(kArticle, Polarity::SupportedBy, "a b c");
  const std::vector<TrainingInstance> in{{c, 1, "r one", LikertScore::of(2), true, "A"},
                                         {c, 2, "r two three four", LikertScore::of(0), false, "B"}};
  const DatasetStats s = dataset_stats(in);
  EXPECT_EQ(s.total, 2u);
  EXPECT_EQ(s.support, 0.5);
  EXPECT_EQ(s.nei, 0.5);
  EXPECT_EQ(s.contradict, 0.0);
  EXPECT_EQ(s.score_counts[LikertScore::of(2).index()], 1u);
  EXPECT_EQ(s.claim_words.mean, 3.0);
  EXPECT_EQ(s.rationale_words.min, 2u);
  EXPECT_EQ(s.rationale_words.max, 4u);
  EXPECT_EQ(s.rationale_words.median, 3.0);
  const json j = to_json(s);
  EXPECT_EQ(j["reference_coarse_fractions"]["support"], 0.383);
  EXPECT_EQ(code_of([] { dataset_stats(std::vector<TrainingInstance>{}); }), ErrorCode::EmptySet);
}

}  // namespace
}  // namespace medv::synth
