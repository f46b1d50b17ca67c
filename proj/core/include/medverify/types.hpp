#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace medv {

// Five-point agreement scale, -2 (strong contradiction) .. +2 (strong agreement).
// Values outside the scale cannot be constructed.
class LikertScore {
 public:
  static constexpr int kMin = -2;
  static constexpr int kMax = 2;

  static constexpr std::optional<LikertScore> from_int(long long v) noexcept {
    if (v < kMin || v > kMax) return std::nullopt;
    return LikertScore(static_cast<int>(v));
  }
  // Throws Error(ErrorCode::Score) when v is off the scale.
  static LikertScore of(long long v);

  static constexpr LikertScore strong_contradiction() noexcept { return LikertScore(-2); }
  static constexpr LikertScore partial_contradiction() noexcept { return LikertScore(-1); }
  static constexpr LikertScore neutral() noexcept { return LikertScore(0); }
  static constexpr LikertScore partial_agreement() noexcept { return LikertScore(1); }
  static constexpr LikertScore strong_agreement() noexcept { return LikertScore(2); }

  // All five scores in ascending order.
  static constexpr std::array<LikertScore, 5> all() noexcept {
    return {LikertScore(-2), LikertScore(-1), LikertScore(0), LikertScore(1), LikertScore(2)};
  }

  constexpr int value() const noexcept { return value_; }
  // 0..4, for histogram bins.
  constexpr std::size_t index() const noexcept { return static_cast<std::size_t>(value_ - kMin); }

  friend constexpr bool operator==(LikertScore, LikertScore) noexcept = default;
  friend constexpr auto operator<=>(LikertScore, LikertScore) noexcept = default;

 private:
  constexpr explicit LikertScore(int v) noexcept : value_(v) {}
  int value_;
};

enum class ThreeWayLabel { Support, NEI, Contradict };

std::string_view to_string(ThreeWayLabel label) noexcept;
// Accepts "support", "nei", "contradict" (any case). Throws Error(Schema).
ThreeWayLabel parse_three_way_label(std::string_view text);

// Parsed verifier output: the think block and the score block.
struct VerificationReport {
  std::string rationale;
  LikertScore score = LikertScore::neutral();

  friend bool operator==(const VerificationReport&, const VerificationReport&) = default;
};

using Pmid = std::int64_t;

struct Article {
  Pmid pmid = 0;
  std::string title;
  std::string abstract;

  friend bool operator==(const Article&, const Article&) = default;
};

enum class Polarity { SupportedBy, RefutedBy };

std::string_view to_string(Polarity p) noexcept;
Polarity parse_polarity(std::string_view text);

struct Claim {
  std::string id;
  std::string text;
  Pmid source_pmid = 0;
  Polarity polarity = Polarity::SupportedBy;

  friend bool operator==(const Claim&, const Claim&) = default;
};

}  // namespace medv
