#include "medverify/types.hpp"

#include <algorithm>
#include <cctype>

#include "medverify/error.hpp"

namespace medv {

namespace {
std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}
}  // namespace

LikertScore LikertScore::of(long long v) {
  if (auto s = from_int(v)) return *s;
  throw Error(ErrorCode::Score, "score " + std::to_string(v) + " is outside -2..2");
}

std::string_view to_string(ThreeWayLabel label) noexcept {
  switch (label) {
    case ThreeWayLabel::Support: return "support";
    case ThreeWayLabel::NEI: return "nei";
    case ThreeWayLabel::Contradict: return "contradict";
  }
  return "nei";
}

ThreeWayLabel parse_three_way_label(std::string_view text) {
  const std::string l = lower(text);
  if (l == "support") return ThreeWayLabel::Support;
  if (l == "nei") return ThreeWayLabel::NEI;
  if (l == "contradict") return ThreeWayLabel::Contradict;
  throw Error(ErrorCode::Schema, "unknown three-way label '" + std::string(text) + "'");
}

std::string_view to_string(Polarity p) noexcept {
  return p == Polarity::SupportedBy ? "supported" : "refuted";
}

Polarity parse_polarity(std::string_view text) {
  const std::string l = lower(text);
  if (l == "supported") return Polarity::SupportedBy;
  if (l == "refuted") return Polarity::RefutedBy;
  throw Error(ErrorCode::Schema, "unknown polarity '" + std::string(text) + "'");
}

}  // namespace medv
