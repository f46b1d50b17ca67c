#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string_view>
#include <vector>

#include "medverify/json_io.hpp"
#include "medverify/types.hpp"

namespace medv::reward {

// One of -1.0, -0.5, 0.0, 0.5, 1.0.
class RewardValue {
 public:
  static constexpr RewardValue format_violation() noexcept { return RewardValue(-2); }
  // 0.5 * (2 - |pred - truth|)
  static constexpr RewardValue for_scores(LikertScore pred, LikertScore truth) noexcept {
    const int diff = pred.value() > truth.value() ? pred.value() - truth.value() : truth.value() - pred.value();
    return RewardValue(2 - diff);
  }

  constexpr double value() const noexcept { return 0.5 * halves_; }
  // Twice the reward, an exact integer in -2..2.
  constexpr int halves() const noexcept { return halves_; }

  friend constexpr bool operator==(RewardValue, RewardValue) noexcept = default;

 private:
  constexpr explicit RewardValue(int halves) noexcept : halves_(halves) {}
  int halves_;
};

// Format check first: anything parse_verification_output rejects (grammar or
// score) earns -1 regardless of any score that could be recovered.
RewardValue reward(std::string_view raw_output, LikertScore y_true);

struct LineReward {
  RewardValue reward = RewardValue::format_violation();
  bool format_violation = false;
};

struct ScoreSummary {
  std::size_t n = 0;
  std::optional<double> mean;  // absent when n == 0
  std::map<int, std::size_t> histogram;  // keyed by RewardValue::halves()
  double format_violation_rate = 0.0;
  std::vector<LineReward> lines;
};

// Scores line-aligned files. Prediction lines are JSON strings holding raw
// model output, objects with an "output" string, or bare text. Gold lines are
// integers or objects with a "score" integer. A header record on either file
// is skipped. Throws Io, LengthMismatch, or Schema for an invalid gold line.
ScoreSummary score_file(const std::filesystem::path& predictions, const std::filesystem::path& gold);

// Aggregates only; histogram keys are reward values ("-1", "-0.5", ... "1").
json to_json(const ScoreSummary& s);

}  // namespace medv::reward
