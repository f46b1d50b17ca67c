#pragma once

#include <string>
#include <string_view>

#include "medverify/types.hpp"

namespace medv {

// Parses verifier output of the form
//
//   <think>rationale</think><score>n</score>
//
// Whitespace is tolerated around and between the two blocks, tags are
// lowercase and case-sensitive, and anything else outside the blocks is a
// format error. The think block is closed by its first "</think>", so score
// tags written inside the rationale stay rationale text.
//
// Throws Error(ErrorCode::Format) on a grammar violation and
// Error(ErrorCode::Score) when the score block is not an integer in -2..2.
VerificationReport parse_verification_output(std::string_view raw);

// Inverse of parse_verification_output for well-formed reports.
std::string render_verification_output(const VerificationReport& report);

// {+2,+1} -> Support, 0 -> NEI, {-1,-2} -> Contradict.
constexpr ThreeWayLabel coarse_label(LikertScore score) noexcept {
  if (score.value() > 0) return ThreeWayLabel::Support;
  if (score.value() < 0) return ThreeWayLabel::Contradict;
  return ThreeWayLabel::NEI;
}

// A claim counts as supported only at partial or strong agreement.
constexpr bool is_supported(LikertScore score) noexcept { return score.value() >= 1; }

// Trims ASCII whitespace from both ends.
std::string_view trim(std::string_view s) noexcept;

}  // namespace medv
