#pragma once

#include <string>
#include <string_view>

#include "medverify/types.hpp"

namespace medv::prompts {

// A system/user message pair ready to send to a chat model.
struct PromptPair {
  std::string system;
  std::string user;
};

extern const std::string_view kSupportedClaimSystem;
extern const std::string_view kRefutedClaimSystem;
extern const std::string_view kVerificationSystem;
extern const std::string_view kQuestionConversionSystem;
extern const std::string_view kClaimExtractionSystem;
extern const std::string_view kWorthinessSystem;

// "Title: {title}\nAbstract: {abstract}"
std::string article_text(const Article& article);
std::string article_text(std::string_view title, std::string_view abstract);

PromptPair claim_generation(const Article& article, Polarity polarity);
// `source` is the rendered article text (see article_text).
PromptPair verification(std::string_view source, std::string_view claim);
PromptPair question_conversion(std::string_view question);
PromptPair claim_extraction(std::string_view model_answer);
PromptPair worthiness_check(std::string_view claim);

}  // namespace medv::prompts
