#include "medverify/reward.hpp"

#include "medverify/error.hpp"
#include "medverify/json_io.hpp"
#include "medverify/verdict.hpp"

namespace medv::reward {

RewardValue reward(std::string_view raw_output, LikertScore y_true) {
  try {
    const VerificationReport report = parse_verification_output(raw_output);
    return RewardValue::for_scores(report.score, y_true);
  } catch (const Error&) {
    return RewardValue::format_violation();
  }
}

namespace {

std::string prediction_text(const std::string& line) {
  const json value = json::parse(line, nullptr, false);
  if (value.is_discarded()) return line;
  if (value.is_string()) return value.get<std::string>();
  if (value.is_object() && value.contains("output") && value["output"].is_string()) {
    return value["output"].get<std::string>();
  }
  return line;
}

LikertScore gold_score(const std::string& line, std::size_t line_no) {
  const json value = json::parse(line, nullptr, false);
  const json* score = &value;
  if (!value.is_discarded() && value.is_object() && value.contains("score")) score = &value["score"];
  if (value.is_discarded() || !score->is_number_integer()) {
    throw Error(ErrorCode::Schema, "gold line " + std::to_string(line_no) + " has no integer score");
  }
  return LikertScore::of(score->get<long long>());
}

}  // namespace

ScoreSummary score_file(const std::filesystem::path& predictions, const std::filesystem::path& gold) {
  const auto preds = read_data_lines(predictions);
  const auto golds = read_data_lines(gold);
  if (preds.size() != golds.size()) {
    throw Error(ErrorCode::LengthMismatch, std::to_string(preds.size()) + " predictions vs " +
                                               std::to_string(golds.size()) + " gold lines");
  }
  ScoreSummary summary;
  summary.n = preds.size();
  summary.lines.resize(preds.size());
  for (int h = -2; h <= 2; ++h) summary.histogram[h] = 0;
  long long halves_sum = 0;
  std::size_t violations = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const LikertScore truth = gold_score(golds[i], i + 1);
    LineReward& lr = summary.lines[i];
    try {
      const VerificationReport report = parse_verification_output(prediction_text(preds[i]));
      lr.reward = RewardValue::for_scores(report.score, truth);
    } catch (const Error&) {
      lr.reward = RewardValue::format_violation();
      lr.format_violation = true;
      ++violations;
    }
    halves_sum += lr.reward.halves();
    ++summary.histogram[lr.reward.halves()];
  }
  if (summary.n > 0) {
    summary.mean = 0.5 * static_cast<double>(halves_sum) / static_cast<double>(summary.n);
    summary.format_violation_rate = static_cast<double>(violations) / static_cast<double>(summary.n);
  }
  return summary;
}

json to_json(const ScoreSummary& s) {
  static const char* const kLabels[] = {"-1", "-0.5", "0", "0.5", "1"};
  json hist = json::object();
  for (const auto& [halves, count] : s.histogram) hist[kLabels[halves + 2]] = count;
  return json{{"n", s.n},
              {"mean", s.mean ? json(*s.mean) : json(nullptr)},
              {"histogram", std::move(hist)},
              {"format_violation_rate", s.format_violation_rate}};
}

}  // namespace medv::reward
