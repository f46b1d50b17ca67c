#include "medverify/prompts.hpp"

namespace medv::prompts {

const std::string_view kSupportedClaimSystem = R"PROMPT(You are a biomedical annotation expert, and your task is to generate a claim that can be supported by the provided article. The claim should be interpretable on its own, without relying on the article. Do not generate anything else than the claim.)PROMPT";

const std::string_view kRefutedClaimSystem = R"PROMPT(You are a biomedical annotation expert, and your task is to generate a claim that can be refuted by the provided article. The claim should be interpretable by its own, without relying on the article. Avoid using simple negative words such as not and no. Do not generate anything else than the claim.)PROMPT";

const std::string_view kVerificationSystem = R"PROMPT(You are a fact-checking expert trained in evidence-based medicine. Your task is to evaluate how strongly an *article* agrees or disagrees with a *claim*. The *article* is retrieved from a search engine using the *claim* as the query.
Use the following five-point scale:
   - **-2 Strong Contradiction**  – The article clearly and directly refutes the claim.
   - **-1 Partial Contradiction** – The article provides mixed or indirect evidence against the claim.
   - ** 0 Neutral / Unrelated**   – The article does not address the claim, offers insufficient information, or is irrelevant to the claim.
   - ** 1 Partial Agreement**	 – The article offers some indirect or tentative support for the claim.
   - ** 2 Strong Agreement**	 – The article explicitly and strongly supports the claim.
Note that the *article* might not describe the exact same subjects, interventions, or measurements as the *claim*. In this case, please note the difference and assign a score of 0.
Output in two parts only and do not output anything else:
<think>[your detailed, step‐by‐step explanation for scoring]</think>
<score>[the integer score only, i.e., -2, -1, 0, 1, or 2]</score>)PROMPT";

const std::string_view kQuestionConversionSystem = R"PROMPT(You are a helpful assistant. Your task is to convert a yes/no question into a declarative statement. The statement should be a claim that is true if the answer to the question is “yes”. Do not output anything else than the converted statement.)PROMPT";

const std::string_view kClaimExtractionSystem = R"PROMPT(You are an expert in biomedical literature and citation analysis. Your task is to extract every factual claim and its corresponding full citation from the provided text.

Instructions:
1. Identify every sentence or clause that makes a factual claim supported by a citation.
2. For each claim, identify the inline citation marker (e.g., “[1]”, “(Smith, 2023)”, “¹”, “(PMID: 12345)”).
3. Resolve this inline citation to its full reference entry from the bibliography/reference list at the end of the text.
  -- If the text uses numeric citations (e.g., AMA, Vancouver, NLM), match the number to the numbered reference list.
  -- If the text uses author-date/page citations (e.g., APA, MLA), match the author/date or author/page to the alphabetical reference list.
  -- If the text uses only inline identifiers (e.g., PMID, DOI) and has no reference list, use the full inline citation string itself (e.g., “PMID: 12345”).
4. Output the results as a strict JSON list of objects (only JSON; no additional text).
5. If a claim has multiple citations, repeat the same claim multiple times, once per citation, each time with a different citation.

JSON Format (example structure):
[
  {
    "claim": "The exact text of the factual claim.",
    "citation": "The full text of the corresponding reference entry (e.g., '1. Author AA. Title. Journal. Year...')."
  }
])PROMPT";

const std::string_view kWorthinessSystem = R"PROMPT(You are a biomedical expert, and your task is to classify if a biomedical claim can be fact-checked.
Please respond with “yes” if the claim meets the requirement, and “no” otherwise. Only output “yes” or “no”.)PROMPT";

std::string article_text(std::string_view title, std::string_view abstract) {
  std::string out;
  out.reserve(title.size() + abstract.size() + 18);
  out.append("Title: ").append(title).append("\nAbstract: ").append(abstract);
  return out;
}

std::string article_text(const Article& article) { return article_text(article.title, article.abstract); }

PromptPair claim_generation(const Article& article, Polarity polarity) {
  PromptPair p;
  p.system = std::string(polarity == Polarity::SupportedBy ? kSupportedClaimSystem : kRefutedClaimSystem);
  p.user = "Here is the article:\n" + article_text(article);
  return p;
}

PromptPair verification(std::string_view source, std::string_view claim) {
  PromptPair p;
  p.system = std::string(kVerificationSystem);
  p.user.append("Article:\n").append(source).append("\n\nClaim:\n").append(claim);
  return p;
}

PromptPair question_conversion(std::string_view question) {
  PromptPair p;
  p.system = std::string(kQuestionConversionSystem);
  p.user.append("Convert the following question into a claim, assuming the answer is “yes”:\nQuestion: ")
      .append(question);
  return p;
}

PromptPair claim_extraction(std::string_view model_answer) {
  return PromptPair{std::string(kClaimExtractionSystem), std::string(model_answer)};
}

PromptPair worthiness_check(std::string_view claim) {
  PromptPair p;
  p.system = std::string(kWorthinessSystem);
  p.user.append("Claim: “").append(claim).append("”");
  return p;
}

}  // namespace medv::prompts
