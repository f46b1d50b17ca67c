#include <gtest/gtest.h>

#include "medverify/bench.hpp"
#include "medverify/verdict.hpp"
#include "test_support.hpp"

namespace medv::bench {
namespace {

using medv::testing::code_of;
using medv::testing::TempDir;
using medv::testing::write_file;

corpus::ArticleStore small_store() {
  corpus::ArticleStore store;
  store.add({100, "Trial of X", "X improved Y."});
  store.add({200, "Cohort of X", "No association."});
  return store;
}

TEST(MapQaAnswer, Mapping) {
  EXPECT_EQ(map_qa_answer("yes"), ThreeWayLabel::Support);
  EXPECT_EQ(map_qa_answer("Maybe"), ThreeWayLabel::NEI);
  EXPECT_EQ(map_qa_answer(" NO "), ThreeWayLabel::Contradict);
  EXPECT_EQ(code_of([] { map_qa_answer("unsure"); }), ErrorCode::UnknownAnswer);
}

TEST(QuestionToClaim, UsesConversionPrompt) {
  gateway::Gateway gw(std::make_shared<gateway::MockChatBackend>(json::parse(R"({
    "rules": [{"user_contains": "Does X cause Y?", "content": " X causes Y.\n"}]})")));
  EXPECT_EQ(question_to_claim(gw, "m", "Does X cause Y?"), "X causes Y.");
  EXPECT_NE(prompts::question_conversion("Q?").user.find("assuming the answer is"), std::string::npos);
}

TEST(QuestionToClaim, BlankReplyIsEmptyClaim) {
  struct Blank final : gateway::ChatBackend {
    std::string send(const gateway::ChatRequest&) override { return "   "; }
  };
  gateway::Gateway gw(std::make_shared<Blank>());
  EXPECT_EQ(code_of([&] { question_to_claim(gw, "m", "Q?"); }), ErrorCode::EmptyClaim);
}

TEST(StripMarkers, Variants) {
  EXPECT_EQ(strip_citation_markers("X works [2]."), "X works.");
  EXPECT_EQ(strip_citation_markers("X [1, 4] and Y [2-5] hold [3]"), "X and Y hold");
  EXPECT_EQ(strip_citation_markers("No markers here."), "No markers here.");
  EXPECT_EQ(strip_citation_markers("Keeps [a] text [12]; really."), "Keeps [a] text; really.");
}

TEST(MedaesqaLabels, Mapping) {
  EXPECT_EQ(map_medaesqa_label("supporting"), ThreeWayLabel::Support);
  EXPECT_EQ(map_medaesqa_label("Contradicting"), ThreeWayLabel::Contradict);
  EXPECT_EQ(map_medaesqa_label("neutral"), ThreeWayLabel::NEI);
  EXPECT_EQ(map_medaesqa_label("not relevant"), ThreeWayLabel::NEI);
  EXPECT_EQ(map_medaesqa_label("not_relevant"), ThreeWayLabel::NEI);
  EXPECT_EQ(code_of([] { map_medaesqa_label("maybe"); }), ErrorCode::Schema);
}

TEST(FlattenMedaesqa, OneInstancePerStatementPmid) {
  const auto store = small_store();
  const json record = json::parse(R"({"id": "q1", "statements": [
    {"text": "X works [2].", "citations": [{"pmid": 100, "label": "supporting"},
                                           {"pmid": "200", "label": "not relevant"}]},
    {"text": "Y fails [1].", "citations": [{"pmid": 999, "label": "contradicting"},
                                           {"label": "supporting"},
                                           {"pmid": "abc", "label": "neutral"}]}]})");
  const FlattenResult r = flatten_medaesqa(record, store);
  ASSERT_EQ(r.instances.size(), 2u);
  EXPECT_EQ(r.dropped, 3u);
  EXPECT_EQ(r.instances[0].claim, "X works.");
  EXPECT_EQ(r.instances[0].gold, ThreeWayLabel::Support);
  EXPECT_EQ(r.instances[0].title, "Trial of X");
  EXPECT_EQ(r.instances[1].gold, ThreeWayLabel::NEI);
  EXPECT_EQ(r.instances[1].abstract, "No association.");
}

TEST(FlattenMedaesqa, MalformedRecordIsSchema) {
  const auto store = small_store();
  EXPECT_EQ(code_of([&] { flatten_medaesqa(json::array(), store); }), ErrorCode::Schema);
  EXPECT_EQ(code_of([&] { flatten_medaesqa(json{{"statements", 3}}, store); }), ErrorCode::Schema);
  EXPECT_EQ(code_of([&] { flatten_medaesqa(json::parse(R"({"statements":[{"citations":[]}]})"), store); }),
            ErrorCode::Schema);
}

TEST(ParsePrediction, Shapes) {
  EXPECT_EQ(parse_prediction("2"), LikertScore::of(2));
  EXPECT_EQ(parse_prediction("{\"score\": -1}"), LikertScore::of(-1));
  EXPECT_EQ(parse_prediction("<think>r</think><score>0</score>"), LikertScore::of(0));
  EXPECT_EQ(parse_prediction(json("<think>r</think><score>1</score>").dump()), LikertScore::of(1));
  EXPECT_EQ(parse_prediction(json{{"output", "<think>r</think><score>-2</score>"}}.dump()), LikertScore::of(-2));
  EXPECT_FALSE(parse_prediction("3"));
  EXPECT_FALSE(parse_prediction("<score>1</score>"));
  EXPECT_FALSE(parse_prediction("[]"));
}

BenchInstance inst(const std::string& tag, ThreeWayLabel gold) { return {tag, "", "c", "", "a", gold}; }

TEST(Evaluate, MacroIsUnweightedMean) {
  std::vector<BenchInstance> instances;
  std::vector<std::optional<LikertScore>> preds;
  // A: 1 of 2 right.
  instances.push_back(inst("A", ThreeWayLabel::Support));
  preds.push_back(LikertScore::of(2));
  instances.push_back(inst("A", ThreeWayLabel::Contradict));
  preds.push_back(LikertScore::of(0));
  // B: 7 of 10 right.
  for (int i = 0; i < 10; ++i) {
    instances.push_back(inst("B", ThreeWayLabel::NEI));
    preds.push_back(i < 7 ? std::optional(LikertScore::of(0)) : std::nullopt);
  }
  const EvalSummary s = evaluate(preds, instances);
  EXPECT_DOUBLE_EQ(s.per_dataset_accuracy.at("A"), 0.5);
  EXPECT_DOUBLE_EQ(s.per_dataset_accuracy.at("B"), 0.7);
  EXPECT_DOUBLE_EQ(s.macro_average, 0.6);
  EXPECT_EQ(s.n.at("B"), 10u);
  EXPECT_EQ(s.unparseable, 3u);
  EXPECT_FALSE(s.macro_ci);
}

TEST(Evaluate, GoldDerivedPredictionsScorePerfectly) {
  std::vector<BenchInstance> instances;
  std::vector<std::optional<LikertScore>> preds;
  for (LikertScore s : LikertScore::all()) {
    instances.push_back(inst(s.value() < 0 ? "neg" : "rest", coarse_label(s)));
    preds.push_back(s);
  }
  const EvalSummary e = evaluate(preds, instances, BootstrapSettings{500, 0.95, 1});
  EXPECT_EQ(e.macro_average, 1.0);
  for (const auto& [tag, acc] : e.per_dataset_accuracy) EXPECT_EQ(acc, 1.0) << tag;
  ASSERT_TRUE(e.macro_ci);
  EXPECT_EQ(*e.macro_ci, (Interval{1.0, 1.0}));
}

TEST(Evaluate, FileFormAndErrors) {
  TempDir dir;
  write_instances(dir / "gold.jsonl", {inst("A", ThreeWayLabel::Support), inst("A", ThreeWayLabel::NEI)});
  write_file(dir / "pred.jsonl", "garbage\nnot a verdict\n");
  const EvalSummary s = evaluate(dir / "pred.jsonl", dir / "gold.jsonl");
  EXPECT_EQ(s.per_dataset_accuracy.at("A"), 0.0);
  EXPECT_EQ(s.unparseable, 2u);
  write_file(dir / "short.jsonl", "1\n");
  EXPECT_EQ(code_of([&] { evaluate(dir / "short.jsonl", dir / "gold.jsonl"); }), ErrorCode::LengthMismatch);
  EXPECT_EQ(code_of([&] { evaluate(dir / "none.jsonl", dir / "gold.jsonl"); }), ErrorCode::Io);
}

TEST(Evaluate, BootstrapIntervalsBracketAccuracy) {
  std::vector<BenchInstance> instances;
  std::vector<std::optional<LikertScore>> preds;
  for (int i = 0; i < 60; ++i) {
    instances.push_back(inst(i % 2 ? "A" : "B", ThreeWayLabel::Support));
    preds.push_back(LikertScore::of(i % 3 == 0 ? -2 : 2));
  }
  const EvalSummary s = evaluate(preds, instances, BootstrapSettings{1000, 0.95, 4});
  for (const auto& [tag, acc] : s.per_dataset_accuracy) {
    EXPECT_LE(s.per_dataset_ci.at(tag).lo, acc);
    EXPECT_GE(s.per_dataset_ci.at(tag).hi, acc);
  }
  EXPECT_LE(s.macro_ci->lo, s.macro_average);
  EXPECT_GE(s.macro_ci->hi, s.macro_average);
  EXPECT_TRUE(to_json(s).contains("macro_ci"));
}

TEST(Instances, RoundTrip) {
  TempDir dir;
  const std::vector<BenchInstance> in{{"scifact", "1:2", "claim", "t", "a", ThreeWayLabel::Contradict}};
  write_instances(dir / "i.jsonl", in);
  EXPECT_EQ(read_instances(dir / "i.jsonl"), in);
}

TEST(Convert, Multivers) {
  TempDir dir;
  write_file(dir / "claims.jsonl",
             R"({"id": 1, "claim": "C1", "evidence": {"11": [{"label": "SUPPORT"}]}, "cited_doc_ids": [11, 12, 13]})"
             "\n"
             R"({"id": 2, "claim": "C2", "evidence": {"12": {"label": "CONTRADICT"}}})"
             "\n");
  write_file(dir / "corpus.jsonl", R"({"doc_id": 11, "title": "T11", "abstract": ["S1.", "S2."]})"
                                   "\n"
                                   R"({"doc_id": 12, "title": "T12", "abstract": "Body."})"
                                   "\n");
  const ConvertResult r = convert_multivers(dir / "claims.jsonl", dir / "corpus.jsonl", "scifact");
  ASSERT_EQ(r.instances.size(), 3u);
  EXPECT_EQ(r.dropped, 1u);
  EXPECT_EQ(r.instances[0].gold, ThreeWayLabel::Support);
  EXPECT_EQ(r.instances[0].abstract, "S1. S2.");
  EXPECT_EQ(r.instances[1].gold, ThreeWayLabel::NEI);
  EXPECT_EQ(r.instances[2].gold, ThreeWayLabel::Contradict);
  EXPECT_EQ(r.instances[2].id, "2:12");
}

TEST(Convert, PubmedqaRemovesConclusions) {
  TempDir dir;
  write_file(dir / "pqa.json", R"({
    "1": {"QUESTION": "Does A help?", "CONTEXTS": ["Bg.", "Res.", "Concl."],
          "LABELS": ["BACKGROUND", "RESULTS", "CONCLUSIONS"], "final_decision": "yes"},
    "2": {"QUESTION": "Does B help?", "CONTEXTS": ["Only."], "LABELS": ["RESULTS"], "final_decision": "no"}})");
  gateway::Gateway gw(std::make_shared<gateway::MockChatBackend>(json{{"default", "A helps."}}));
  const ConvertResult r = convert_pubmedqa(dir / "pqa.json", gw, "m", 2);
  ASSERT_EQ(r.instances.size(), 1u);
  EXPECT_EQ(r.dropped, 1u);
  EXPECT_EQ(r.instances[0].abstract, "Bg. Res.");
  EXPECT_EQ(r.instances[0].claim, "A helps.");
  EXPECT_EQ(r.instances[0].gold, ThreeWayLabel::Support);
}

TEST(Convert, BioasqYesNoOnly) {
  TempDir dir;
  write_file(dir / "b.json", R"({"questions": [
    {"id": "q1", "type": "yesno", "body": "Is Z safe?", "exact_answer": "no", "snippets": [{"text": "Z harmed."}]},
    {"id": "q2", "type": "factoid", "body": "What is Z?", "exact_answer": ["z"], "snippets": [{"text": "."}]},
    {"id": "q3", "type": "yesno", "body": "Is W safe?", "exact_answer": "yes", "snippets": []}]})");
  gateway::Gateway gw(std::make_shared<gateway::MockChatBackend>(json{{"default", "Z is safe."}}));
  const ConvertResult r = convert_bioasq(dir / "b.json", gw, "m", 1);
  ASSERT_EQ(r.instances.size(), 1u);
  EXPECT_EQ(r.dropped, 1u);
  EXPECT_EQ(r.instances[0].gold, ThreeWayLabel::Contradict);
  EXPECT_EQ(r.instances[0].abstract, "Z harmed.");
}

}  // namespace
}  // namespace medv::bench
