#pragma once

#include "semcache/core.hpp"

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace semcache {

// A pair of images up for replaceability judgment: same (website, category),
// different articles. Descriptions are present only on the two-step path.
struct PairContext {
    const ImageRecord* image_a = nullptr;
    const ImageRecord* image_b = nullptr;
    std::optional<std::string> description_a;
    std::optional<std::string> description_b;
};

// Validates the scope/article invariants.
PairContext make_pair_context(const ImageRecord& a, const ImageRecord& b);

struct Rating {
    int score = 0;  // 0..4
    std::string justification;
    std::string raw_response;
};

enum class RatingParseErrorCode { MissingTag, NonInteger, OutOfRange };

class RatingParseError : public std::runtime_error {
public:
    RatingParseError(RatingParseErrorCode code, const std::string& detail)
        : std::runtime_error(detail), code_(code) {}
    RatingParseErrorCode code() const { return code_; }

private:
    RatingParseErrorCode code_;
};

// ---- prompt templates -----------------------------------------------------

enum class PromptKind { Base, MetricDriven };
enum class PromptMode { DirectImages, Descriptions };

// Canonical template text; prompts/*.txt in the repo hold byte-identical
// copies (a test keeps them in sync).
const std::string& prompt_template(PromptKind kind);

// Pure slot substitution: replaces {{ image_a }}, {{ image_b }},
// {{ image_a_context }} and {{ image_b_context }} in the template.
std::string render_template(const std::string& template_text, const std::string& image_a_slot,
                            const std::string& image_b_slot, const std::string& context_a,
                            const std::string& context_b);

// "Article heading: ..." plus an "Alt text: ..." line when alt is present.
std::string format_pair_member_context(const std::string& heading,
                                       const std::optional<std::string>& alt_text);

// DirectImages mode marks the image slots as attachments; Descriptions mode
// substitutes the generated descriptions and requires them to be present.
std::string render_prompt(PromptKind kind, const PairContext& pair, PromptMode mode);

// Extracts the first integer inside <rating>...</rating> and the
// <justification> block; tolerant of surrounding prose and whitespace.
// Throws RatingParseError (MissingTag | NonInteger | OutOfRange).
Rating parse_rating(const std::string& response_text);

// ---- scorers ----------------------------------------------------------------

Rating score_ground_truth(const ReplaceabilityMatrix& matrix, const PairContext& pair);

// Offline stand-in: Jaccard token overlap of heading + alt text, bucketed
// at >=0.8 -> 4, >=0.6 -> 3, >=0.4 -> 2, >=0.2 -> 1, else 0. Symmetric and
// deterministic; two empty texts count as identical.
Rating score_heuristic(const PairContext& pair);

// ---- inference endpoints ----------------------------------------------------

struct MessagePart {
    enum class Kind { Text, Image };
    Kind kind = Kind::Text;
    std::string content;  // text, or an image locator the adapter resolves

    static MessagePart text(std::string t) { return {Kind::Text, std::move(t)}; }
    static MessagePart image(std::string ref) { return {Kind::Image, std::move(ref)}; }
};

class InferenceEndpoint {
public:
    virtual ~InferenceEndpoint() = default;
    virtual std::string complete(const std::vector<MessagePart>& parts) = 0;
};

struct EndpointConfig {
    std::string url;
    std::string api_key;
    std::string model;

    // Reads SEMCACHE_LLM_URL, SEMCACHE_LLM_KEY, SEMCACHE_LLM_MODEL.
    static EndpointConfig from_env();
};

// POSTs an OpenAI-style chat completion request to the configured URL and
// returns the first choice's message content.
class HttpEndpoint : public InferenceEndpoint {
public:
    explicit HttpEndpoint(EndpointConfig config) : config_(std::move(config)) {}
    std::string complete(const std::vector<MessagePart>& parts) override;

private:
    EndpointConfig config_;
};

enum class PipelineKind { Direct, TwoStep };

inline constexpr const char* kDescribeInstruction =
    "Describe this image in detail, covering the main subjects, setting, "
    "actions and overall tone.";

struct LlmScoreOptions {
    PipelineKind pipeline = PipelineKind::Direct;
    PromptKind prompt = PromptKind::MetricDriven;
    int max_attempts = 3;
};

// Renders, sends and parses; on a parse failure retries the identical prompt
// up to max_attempts, then rethrows the last parse error. TwoStep generates
// missing descriptions through `describer` before judging.
Rating score_llm(InferenceEndpoint& judge, InferenceEndpoint* describer, PairContext pair,
                 const LlmScoreOptions& options);

// ---- dynamic few-shot selection ---------------------------------------------

struct LabeledComparison {
    ScopeKey scope;
    ImageId id_a = 0;  // id_a < id_b
    ImageId id_b = 0;
    int score = 0;
};

struct FewShotSelection {
    std::vector<LabeledComparison> examples;
    bool truncated = false;  // fewer than k comparisons were available
};

using TextSimilarity = std::function<double(const std::string&, const std::string&)>;

// Token-frequency cosine over lowercased alphanumeric tokens.
double token_cosine_similarity(const std::string& a, const std::string& b);

// Picks the train category most similar to the pair's category name, the
// train image in it closest to image A (heading + alt text), then the first
// k labeled inter-article comparisons involving that image in ascending
// pair-id order.
FewShotSelection select_few_shot(const PairContext& pair, const Dataset& train, std::size_t k,
                                 const TextSimilarity& similarity = token_cosine_similarity);

// ---- cost model ---------------------------------------------------------------

struct CostModel {
    double input_price_per_token = 0.0;
    double output_price_per_token = 0.0;
    int in_tokens = 1300;   // conservative average per image-pair comparison
    int out_tokens = 300;

    bool valid() const { return input_price_per_token >= 0 && output_price_per_token >= 0; }
};

double cost_per_comparison(const CostModel& model);

// Built-in per-token rates for the models the batch scorer targets.
std::vector<std::pair<std::string, CostModel>> default_price_table();

} // namespace semcache
