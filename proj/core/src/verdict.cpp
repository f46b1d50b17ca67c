#include "medverify/verdict.hpp"

#include <charconv>

#include "medverify/error.hpp"

namespace medv {

namespace {

constexpr std::string_view kThinkOpen = "<think>";
constexpr std::string_view kThinkClose = "</think>";
constexpr std::string_view kScoreOpen = "<score>";
constexpr std::string_view kScoreClose = "</score>";

bool is_space(char c) noexcept {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::size_t skip_space(std::string_view s, std::size_t pos) noexcept {
  while (pos < s.size() && is_space(s[pos])) ++pos;
  return pos;
}

[[noreturn]] void format_error(const std::string& what) { throw Error(ErrorCode::Format, what); }

// Reads "<open>body</close>" at pos; returns the body and advances pos past the close tag.
std::string_view read_block(std::string_view s, std::size_t& pos, std::string_view open,
                            std::string_view close) {
  if (s.substr(pos, open.size()) != open) {
    format_error("expected " + std::string(open) + " at offset " + std::to_string(pos));
  }
  const std::size_t body = pos + open.size();
  const std::size_t end = s.find(close, body);
  if (end == std::string_view::npos) format_error("unterminated " + std::string(open) + " block");
  pos = end + close.size();
  return s.substr(body, end - body);
}

LikertScore parse_score(std::string_view body) {
  std::string_view digits = trim(body);
  if (!digits.empty() && digits.front() == '+') {
    digits.remove_prefix(1);
    if (!digits.empty() && digits.front() == '-') {
      throw Error(ErrorCode::Score, "malformed score '" + std::string(body) + "'");
    }
  }
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
  if (digits.empty() || ec != std::errc{} || ptr != digits.data() + digits.size()) {
    throw Error(ErrorCode::Score, "score block is not an integer: '" + std::string(body) + "'");
  }
  return LikertScore::of(v);
}

}  // namespace

std::string_view trim(std::string_view s) noexcept {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return s.substr(b, e - b);
}

VerificationReport parse_verification_output(std::string_view raw) {
  std::size_t pos = skip_space(raw, 0);
  const std::string_view think = read_block(raw, pos, kThinkOpen, kThinkClose);
  pos = skip_space(raw, pos);
  const std::string_view score = read_block(raw, pos, kScoreOpen, kScoreClose);
  pos = skip_space(raw, pos);
  if (pos != raw.size()) format_error("unexpected text after the score block");

  const std::string_view rationale = trim(think);
  if (rationale.empty()) format_error("empty think block");
  return VerificationReport{std::string(rationale), parse_score(score)};
}

std::string render_verification_output(const VerificationReport& report) {
  const std::string_view r = report.rationale;
  if (r.empty() || trim(r).size() != r.size() || r.find(kThinkClose) != std::string_view::npos) {
    throw Error(ErrorCode::Format, "rationale cannot be rendered as a think block");
  }
  std::string out;
  out.reserve(r.size() + 40);
  out.append(kThinkOpen).append(r).append(kThinkClose);
  out.append(kScoreOpen).append(std::to_string(report.score.value())).append(kScoreClose);
  return out;
}

}  // namespace medv
