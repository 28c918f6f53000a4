#include "semcache/scorer.hpp"

#include "semcache/metrics.hpp"

#include <httplib.h>
#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <map>
#include <set>

namespace semcache {
namespace {

const std::string kBasePrompt = R"PROMPT(You are tasked with evaluating the replaceability of two images from different articles within the same category of a news website.
Consider how well the two images align with each other in terms of their content and context.

Use the following rating scale:

0: Not replaceable
1: Somewhat replaceable
2: Moderately replaceable
3: Very replaceable
4: Completely replaceable

Images and Associated Context:

<image_a>
    {{ image_a }}
</image_a>
<image_a_context>
    {{ image_a_context }}
</image_a_context>

<image_b>
    {{ image_b }}
</image_b>
<image_b_context>
    {{ image_b_context }}
</image_b_context>

Using chain of thought prompting, analyze these two images and rate their replaceability.
Break down your thought process step by step.
Write your answer in the following format:

<rating>
[Your rating (0-4)]
</rating>

<justification>
Explanation: [Brief explanation for your rating,
synthesizing your analysis of all factors]
</justification>
)PROMPT";

const std::string kMetricDrivenPrompt = R"PROMPT(You are tasked with evaluating the semantic replaceability of two images (Image A and Image B) from different articles within the same category of a news website.
Your goal is to determine how interchangeable these images are based on their contexts and semantic similarity of the images, which include the article headings and alt text (where available).

Use the following rating scale for replaceability:

0: Not replaceable
1: Somewhat replaceable
2: Moderately replaceable
3: Very replaceable
4: Completely replaceable

Here are the contexts for the two images:

<image_a>
    {{ image_a }}
</image_a>
<image_a_context>
    {{ image_a_context }}
</image_a_context>

<image_b>
    {{ image_b }}
</image_b>
<image_b_context>
    {{ image_b_context }}
</image_b_context>

Consider the following factors when evaluating their semantic replaceability:
1. Similarity of topics
2. Specificity of information conveyed (e.g., specific people, places, etc.)
3. Emotional tone or impact
4. Potential for misinterpretation if swapped

Using chain of thought prompting, analyze these two images and rate their replaceability.
Break down your thought process step by step.
Write your answer in the following format:

<rating>
[Your rating (0-4)]
</rating>

<justification>
Explanation: [Brief explanation for your rating,
synthesizing your analysis of all factors]
</justification>
)PROMPT";

void replace_all(std::string& text, const std::string& needle, const std::string& value) {
    std::size_t pos = 0;
    while ((pos = text.find(needle, pos)) != std::string::npos) {
        text.replace(pos, needle.size(), value);
        pos += value.size();
    }
}

std::string trim(const std::string& text) {
    std::size_t begin = 0;
    std::size_t end = text.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
    return text.substr(begin, end - begin);
}

std::optional<std::string> tag_content(const std::string& text, const std::string& tag) {
    const std::string open = "<" + tag + ">";
    const std::string close = "</" + tag + ">";
    const auto start = text.find(open);
    if (start == std::string::npos) return std::nullopt;
    const auto body = start + open.size();
    const auto end = text.find(close, body);
    if (end == std::string::npos) return std::nullopt;
    return text.substr(body, end - body);
}

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string current;
    for (char c : text) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            current += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

std::string metadata_text(const ImageRecord& image) {
    std::string text = image.heading;
    if (image.alt_text) {
        text += " ";
        text += *image.alt_text;
    }
    return text;
}

std::string image_locator(const ImageRecord& image) {
    return image.website + "/" + image.category + "/" + std::to_string(image.image_id);
}

} // namespace

PairContext make_pair_context(const ImageRecord& a, const ImageRecord& b) {
    if (a.website != b.website || a.category != b.category) {
        throw std::invalid_argument("pair context: images must share (website, category), got " +
                                    a.website + "/" + a.category + " vs " + b.website + "/" +
                                    b.category);
    }
    if (a.article_id == b.article_id) {
        throw std::invalid_argument("pair context: images " + std::to_string(a.image_id) +
                                    " and " + std::to_string(b.image_id) +
                                    " are from the same article " + a.article_id);
    }
    PairContext pair;
    pair.image_a = &a;
    pair.image_b = &b;
    return pair;
}

const std::string& prompt_template(PromptKind kind) {
    return kind == PromptKind::Base ? kBasePrompt : kMetricDrivenPrompt;
}

std::string render_template(const std::string& template_text, const std::string& image_a_slot,
                            const std::string& image_b_slot, const std::string& context_a,
                            const std::string& context_b) {
    std::string out = template_text;
    replace_all(out, "{{ image_a }}", image_a_slot);
    replace_all(out, "{{ image_b }}", image_b_slot);
    replace_all(out, "{{ image_a_context }}", context_a);
    replace_all(out, "{{ image_b_context }}", context_b);
    return out;
}

std::string format_pair_member_context(const std::string& heading,
                                       const std::optional<std::string>& alt_text) {
    std::string out = "Article heading: " + heading;
    if (alt_text) {
        out += "\nAlt text: " + *alt_text;
    }
    return out;
}

std::string render_prompt(PromptKind kind, const PairContext& pair, PromptMode mode) {
    std::string slot_a;
    std::string slot_b;
    if (mode == PromptMode::Descriptions) {
        if (!pair.description_a || !pair.description_b) {
            throw std::invalid_argument("render_prompt: Descriptions mode requires both "
                                        "image descriptions");
        }
        slot_a = *pair.description_a;
        slot_b = *pair.description_b;
    } else {
        slot_a = "[image A attached]";
        slot_b = "[image B attached]";
    }
    return render_template(prompt_template(kind), slot_a, slot_b,
                           format_pair_member_context(pair.image_a->heading,
                                                      pair.image_a->alt_text),
                           format_pair_member_context(pair.image_b->heading,
                                                      pair.image_b->alt_text));
}

Rating parse_rating(const std::string& response_text) {
    const auto rating_body = tag_content(response_text, "rating");
    if (!rating_body) {
        throw RatingParseError(RatingParseErrorCode::MissingTag,
                               "no <rating>...</rating> block in response");
    }
    const std::string body = trim(*rating_body);

    // First integer token inside the tag ("3", "[3]", "3/4" all yield 3).
    std::size_t pos = 0;
    while (pos < body.size() && !std::isdigit(static_cast<unsigned char>(body[pos])) &&
           !(body[pos] == '-' && pos + 1 < body.size() &&
             std::isdigit(static_cast<unsigned char>(body[pos + 1])))) {
        ++pos;
    }
    if (pos == body.size()) {
        throw RatingParseError(RatingParseErrorCode::NonInteger,
                               "rating tag contains no integer: '" + body + "'");
    }
    long value = 0;
    try {
        value = std::stol(body.substr(pos));
    } catch (const std::exception&) {
        throw RatingParseError(RatingParseErrorCode::NonInteger,
                               "rating tag contains no integer: '" + body + "'");
    }
    if (value < kScaleMin || value > kScaleMax) {
        throw RatingParseError(RatingParseErrorCode::OutOfRange,
                               "rating " + std::to_string(value) + " outside 0..4");
    }

    Rating rating;
    rating.score = static_cast<int>(value);
    rating.raw_response = response_text;
    if (const auto justification = tag_content(response_text, "justification")) {
        rating.justification = trim(*justification);
    }
    return rating;
}

Rating score_ground_truth(const ReplaceabilityMatrix& matrix, const PairContext& pair) {
    Rating rating;
    rating.score = replaceability(matrix, pair.image_a->image_id, pair.image_b->image_id);
    rating.justification = "ground-truth";
    return rating;
}

Rating score_heuristic(const PairContext& pair) {
    const auto tokens_a = tokenize(metadata_text(*pair.image_a));
    const auto tokens_b = tokenize(metadata_text(*pair.image_b));
    const std::set<std::string> set_a(tokens_a.begin(), tokens_a.end());
    const std::set<std::string> set_b(tokens_b.begin(), tokens_b.end());

    double jaccard = 1.0;  // two empty texts are identical
    if (!set_a.empty() || !set_b.empty()) {
        std::size_t common = 0;
        for (const auto& token : set_a) common += set_b.count(token);
        jaccard = static_cast<double>(common) /
                  static_cast<double>(set_a.size() + set_b.size() - common);
    }

    int score = 0;
    if (jaccard >= 0.8) score = 4;
    else if (jaccard >= 0.6) score = 3;
    else if (jaccard >= 0.4) score = 2;
    else if (jaccard >= 0.2) score = 1;

    Rating rating;
    rating.score = score;
    rating.justification = "token-overlap " + std::to_string(jaccard);
    return rating;
}

EndpointConfig EndpointConfig::from_env() {
    EndpointConfig config;
    if (const char* url = std::getenv("SEMCACHE_LLM_URL")) config.url = url;
    if (const char* key = std::getenv("SEMCACHE_LLM_KEY")) config.api_key = key;
    if (const char* model = std::getenv("SEMCACHE_LLM_MODEL")) config.model = model;
    return config;
}

std::string HttpEndpoint::complete(const std::vector<MessagePart>& parts) {
    if (config_.url.empty()) {
        throw std::runtime_error("endpoint: SEMCACHE_LLM_URL not configured");
    }
    std::string base = config_.url;
    std::string path = "/v1/chat/completions";
    const auto scheme = base.find("://");
    if (scheme != std::string::npos) {
        const auto slash = base.find('/', scheme + 3);
        if (slash != std::string::npos) {
            path = base.substr(slash);
            base = base.substr(0, slash);
        }
    }

    nlohmann::json content = nlohmann::json::array();
    for (const auto& part : parts) {
        if (part.kind == MessagePart::Kind::Text) {
            content.push_back({{"type", "text"}, {"text", part.content}});
        } else {
            content.push_back({{"type", "image_url"}, {"image_url", {{"url", part.content}}}});
        }
    }
    const nlohmann::json payload{
        {"model", config_.model},
        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", content}}})}};

    httplib::Client client(base);
    client.set_read_timeout(120, 0);
    httplib::Headers headers;
    if (!config_.api_key.empty()) {
        headers.emplace("Authorization", "Bearer " + config_.api_key);
    }
    auto res = client.Post(path, headers, payload.dump(), "application/json");
    if (!res) {
        throw std::runtime_error("endpoint: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
        throw std::runtime_error("endpoint: status " + std::to_string(res->status) + ": " +
                                 res->body);
    }
    const auto doc = nlohmann::json::parse(res->body);
    return doc.at("choices").at(0).at("message").at("content").get<std::string>();
}

Rating score_llm(InferenceEndpoint& judge, InferenceEndpoint* describer, PairContext pair,
                 const LlmScoreOptions& options) {
    if (options.max_attempts < 1) {
        throw std::invalid_argument("score_llm: max_attempts must be >= 1");
    }

    PromptMode mode = PromptMode::DirectImages;
    if (options.pipeline == PipelineKind::TwoStep) {
        mode = PromptMode::Descriptions;
        if (!describer && (!pair.description_a || !pair.description_b)) {
            throw std::invalid_argument("score_llm: two-step pipeline needs a describer "
                                        "endpoint or precomputed descriptions");
        }
        if (!pair.description_a) {
            pair.description_a = describer->complete(
                {MessagePart::text(kDescribeInstruction),
                 MessagePart::image(image_locator(*pair.image_a))});
        }
        if (!pair.description_b) {
            pair.description_b = describer->complete(
                {MessagePart::text(kDescribeInstruction),
                 MessagePart::image(image_locator(*pair.image_b))});
        }
    }

    const std::string prompt = render_prompt(options.prompt, pair, mode);
    std::vector<MessagePart> parts{MessagePart::text(prompt)};
    if (mode == PromptMode::DirectImages) {
        parts.push_back(MessagePart::image(image_locator(*pair.image_a)));
        parts.push_back(MessagePart::image(image_locator(*pair.image_b)));
    }

    for (int attempt = 1;; ++attempt) {
        const std::string response = judge.complete(parts);
        try {
            return parse_rating(response);
        } catch (const RatingParseError&) {
            if (attempt >= options.max_attempts) throw;
        }
    }
}

double token_cosine_similarity(const std::string& a, const std::string& b) {
    std::map<std::string, double> freq_a;
    std::map<std::string, double> freq_b;
    for (const auto& token : tokenize(a)) freq_a[token] += 1.0;
    for (const auto& token : tokenize(b)) freq_b[token] += 1.0;
    if (freq_a.empty() || freq_b.empty()) return 0.0;

    double dot = 0.0;
    for (const auto& [token, count] : freq_a) {
        if (auto it = freq_b.find(token); it != freq_b.end()) dot += count * it->second;
    }
    double norm_a = 0.0;
    double norm_b = 0.0;
    for (const auto& [_, count] : freq_a) norm_a += count * count;
    for (const auto& [_, count] : freq_b) norm_b += count * count;
    return dot / (std::sqrt(norm_a) * std::sqrt(norm_b));
}

FewShotSelection select_few_shot(const PairContext& pair, const Dataset& train, std::size_t k,
                                 const TextSimilarity& similarity) {
    if (train.matrices.empty()) {
        throw std::invalid_argument("select_few_shot: train dataset has no categories");
    }

    // 1. Train category whose name best matches the pair's category.
    const ReplaceabilityMatrix* best_matrix = nullptr;
    double best_category_sim = -1.0;
    for (const auto& [scope, matrix] : train.matrices) {
        const double sim = similarity(pair.image_a->category, scope.category);
        if (sim > best_category_sim) {
            best_category_sim = sim;
            best_matrix = &matrix;
        }
    }

    // 2. Train image in that category closest to image A.
    std::vector<ImageId> ids = best_matrix->ids();
    std::sort(ids.begin(), ids.end());
    const std::string query_text = metadata_text(*pair.image_a);
    ImageId anchor = ids.front();
    double best_image_sim = -1.0;
    const ScopeKey scope{best_matrix->website(), best_matrix->category()};
    for (ImageId id : ids) {
        const ImageRecord* record = train.find_image(scope, id);
        const double sim = similarity(query_text, record ? metadata_text(*record) : "");
        if (sim > best_image_sim) {
            best_image_sim = sim;
            anchor = id;
        }
    }

    // 3. First k labeled inter-article comparisons involving the anchor.
    FewShotSelection selection;
    for (ImageId other : ids) {
        if (other == anchor) continue;
        if (best_matrix->article_of(other) == best_matrix->article_of(anchor)) continue;
        LabeledComparison comparison;
        comparison.scope = scope;
        comparison.id_a = std::min(anchor, other);
        comparison.id_b = std::max(anchor, other);
        comparison.score = best_matrix->score(anchor, other);
        selection.examples.push_back(comparison);
    }
    std::sort(selection.examples.begin(), selection.examples.end(),
              [](const LabeledComparison& x, const LabeledComparison& y) {
                  return std::pair(x.id_a, x.id_b) < std::pair(y.id_a, y.id_b);
              });
    if (selection.examples.size() > k) {
        selection.examples.resize(k);
    } else if (selection.examples.size() < k) {
        selection.truncated = true;
    }
    return selection;
}

double cost_per_comparison(const CostModel& model) {
    if (!model.valid()) {
        throw std::invalid_argument("cost model: prices must be non-negative");
    }
    return model.in_tokens * model.input_price_per_token +
           model.out_tokens * model.output_price_per_token;
}

std::vector<std::pair<std::string, CostModel>> default_price_table() {
    // Per-token rates derived from published per-comparison costs at the
    // 1300-in / 300-out token averages.
    return {
        {"claude-3.5-sonnet", {0.0039 / 1300.0, 0.0045 / 300.0}},
        {"gpt-4o", {0.00325 / 1300.0, 0.003 / 300.0}},
        {"gemini-1.5-pro", {0.00114 / 1300.0, 0.00038 / 300.0}},
        {"llama-3.1", {0.0, 0.0}},
    };
}

} // namespace semcache
