#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "semcache/scorer.hpp"
#include "support/fixtures.hpp"

#include <algorithm>

using namespace semcache;

namespace {

class ScriptedEndpoint : public InferenceEndpoint {
public:
    explicit ScriptedEndpoint(std::vector<std::string> responses)
        : responses_(std::move(responses)) {}

    std::string complete(const std::vector<MessagePart>& parts) override {
        calls.push_back(parts);
        const auto& response = responses_[std::min(next_, responses_.size() - 1)];
        ++next_;
        return response;
    }

    std::vector<std::vector<MessagePart>> calls;

private:
    std::vector<std::string> responses_;
    std::size_t next_ = 0;
};

std::size_t count_occurrences(const std::string& text, const std::string& needle) {
    std::size_t count = 0;
    std::size_t pos = 0;
    while ((pos = text.find(needle, pos)) != std::string::npos) {
        ++count;
        pos += needle.size();
    }
    return count;
}

} // namespace

TEST_CASE("pair context enforces scope and article invariants") {
    const auto ds = load_dataset(semcache::testing::toy_manifest());
    const ScopeKey politics{"news-alpha", "politics"};
    const auto& img1 = *ds.find_image(politics, 1);
    const auto& img2 = *ds.find_image(politics, 2);  // same article as 1
    const auto& img3 = *ds.find_image(politics, 3);
    const auto& sports = *ds.find_image({"news-alpha", "sports"}, 1);

    CHECK_NOTHROW((void)make_pair_context(img1, img3));
    CHECK_THROWS_AS((void)make_pair_context(img1, img2), std::invalid_argument);
    CHECK_THROWS_AS((void)make_pair_context(img1, sports), std::invalid_argument);
}

TEST_CASE("embedded templates match the prompt files byte for byte") {
    CHECK(prompt_template(PromptKind::Base) ==
          semcache::testing::read_file(semcache::testing::prompt_dir() / "base_prompt.txt"));
    CHECK(prompt_template(PromptKind::MetricDriven) ==
          semcache::testing::read_file(semcache::testing::prompt_dir() /
                                       "metric_driven_prompt.txt"));
}

TEST_CASE("rendering with empty slots reproduces the template fixed point") {
    const auto rendered = render_template(prompt_template(PromptKind::Base), "", "", "", "");
    CHECK(rendered ==
          semcache::testing::read_file(semcache::testing::golden_dir() / "base_empty.txt"));
}

TEST_CASE("rendered prompts byte-match the golden instantiations") {
    const auto ds = load_dataset(semcache::testing::toy_manifest());
    const ScopeKey politics{"news-alpha", "politics"};
    auto pair = make_pair_context(*ds.find_image(politics, 1), *ds.find_image(politics, 3));

    CHECK(render_prompt(PromptKind::Base, pair, PromptMode::DirectImages) ==
          semcache::testing::read_file(semcache::testing::golden_dir() /
                                       "base_direct_pair.txt"));
    CHECK(render_prompt(PromptKind::MetricDriven, pair, PromptMode::DirectImages) ==
          semcache::testing::read_file(semcache::testing::golden_dir() /
                                       "metric_direct_pair.txt"));

    pair.description_a = "A senator stands at a podium mid-speech, flanked by national flags.";
    pair.description_b = "A dense crowd fills a downtown square holding banners.";
    CHECK(render_prompt(PromptKind::MetricDriven, pair, PromptMode::Descriptions) ==
          semcache::testing::read_file(semcache::testing::golden_dir() /
                                       "metric_descriptions_pair.txt"));
}

TEST_CASE("metric-driven template carries the four factor lines verbatim") {
    const auto& text = prompt_template(PromptKind::MetricDriven);
    CHECK(text.find("1. Similarity of topics") != std::string::npos);
    CHECK(text.find("2. Specificity of information conveyed (e.g., specific people, places, "
                    "etc.)") != std::string::npos);
    CHECK(text.find("3. Emotional tone or impact") != std::string::npos);
    CHECK(text.find("4. Potential for misinterpretation if swapped") != std::string::npos);
}

TEST_CASE("rendered prompt contains each heading exactly once") {
    const auto ds = load_dataset(semcache::testing::toy_manifest());
    const ScopeKey politics{"news-alpha", "politics"};
    const auto pair = make_pair_context(*ds.find_image(politics, 1), *ds.find_image(politics, 3));
    const auto rendered = render_prompt(PromptKind::Base, pair, PromptMode::DirectImages);
    CHECK(count_occurrences(rendered, "Senate passes budget bill") == 1);
    CHECK(count_occurrences(rendered, "Rally draws thousands downtown") == 1);
}

TEST_CASE("descriptions mode requires descriptions") {
    const auto ds = load_dataset(semcache::testing::toy_manifest());
    const ScopeKey politics{"news-alpha", "politics"};
    const auto pair = make_pair_context(*ds.find_image(politics, 1), *ds.find_image(politics, 3));
    CHECK_THROWS_AS((void)render_prompt(PromptKind::Base, pair, PromptMode::Descriptions),
                    std::invalid_argument);
}

TEST_CASE("parse_rating accepts tolerant shapes") {
    const auto simple = parse_rating("<rating>\n3\n</rating><justification>ok</justification>");
    CHECK(simple.score == 3);
    CHECK(simple.justification == "ok");

    const auto prose = parse_rating(
        "Let me think step by step... done.\n<rating> 2 </rating>\n"
        "<justification>\n  close topics \n</justification> trailing");
    CHECK(prose.score == 2);
    CHECK(prose.justification == "close topics");

    CHECK(parse_rating("<rating>[4]</rating>").score == 4);
    CHECK(parse_rating("<rating>0</rating>").score == 0);
    CHECK(parse_rating("<rating>1</rating>").justification.empty());
}

TEST_CASE("parse_rating error taxonomy") {
    auto code = [](const std::string& text) {
        try {
            (void)parse_rating(text);
        } catch (const RatingParseError& e) {
            return e.code();
        }
        FAIL("expected RatingParseError");
        return RatingParseErrorCode::MissingTag;
    };

    CHECK(code("no tags at all") == RatingParseErrorCode::MissingTag);
    CHECK(code("<rating>3") == RatingParseErrorCode::MissingTag);
    CHECK(code("<rating>high</rating>") == RatingParseErrorCode::NonInteger);
    CHECK(code("<rating></rating>") == RatingParseErrorCode::NonInteger);
    CHECK(code("<rating>5</rating>") == RatingParseErrorCode::OutOfRange);
    CHECK(code("<rating>-1</rating>") == RatingParseErrorCode::OutOfRange);
}

TEST_CASE("ground truth scorer reads the matrix symmetrically") {
    const auto ds = load_dataset(semcache::testing::toy_manifest());
    const ScopeKey politics{"news-alpha", "politics"};
    const auto& matrix = *ds.find_matrix(politics);
    const auto pair = make_pair_context(*ds.find_image(politics, 1), *ds.find_image(politics, 3));
    const auto reversed =
        make_pair_context(*ds.find_image(politics, 3), *ds.find_image(politics, 1));

    const auto rating = score_ground_truth(matrix, pair);
    CHECK(rating.score == 3);
    CHECK(rating.justification == "ground-truth");
    CHECK(score_ground_truth(matrix, reversed).score == rating.score);
}

TEST_CASE("heuristic scorer buckets token overlap") {
    auto record = [](ImageId id, std::string heading, std::optional<std::string> alt) {
        ImageRecord rec;
        rec.website = "w";
        rec.category = "c";
        rec.article_id = "a" + std::to_string(id);
        rec.image_id = id;
        rec.heading = std::move(heading);
        rec.alt_text = std::move(alt);
        return rec;
    };

    const auto identical_a = record(1, "storm hits coast", "evacuation photo");
    const auto identical_b = record(2, "storm hits coast", "evacuation photo");
    CHECK(score_heuristic(make_pair_context(identical_a, identical_b)).score == 4);

    const auto disjoint_a = record(1, "alpha beta", std::nullopt);
    const auto disjoint_b = record(2, "gamma delta", std::nullopt);
    CHECK(score_heuristic(make_pair_context(disjoint_a, disjoint_b)).score == 0);

    // jaccard {a,b,c} vs {a,b,d} = 2/4 = 0.5 -> bucket 2
    const auto half_a = record(1, "alpha beta common", std::nullopt);
    const auto half_b = record(2, "alpha beta other", std::nullopt);
    const auto half = score_heuristic(make_pair_context(half_a, half_b));
    CHECK(half.score == 2);

    // symmetric and deterministic
    CHECK(score_heuristic(make_pair_context(half_b, half_a)).score == half.score);

    const auto empty_a = record(1, "", std::nullopt);
    const auto empty_b = record(2, "", std::nullopt);
    CHECK(score_heuristic(make_pair_context(empty_a, empty_b)).score == 4);
}

TEST_CASE("score_llm: valid mock response round-trips") {
    const auto ds = load_dataset(semcache::testing::toy_manifest());
    const ScopeKey politics{"news-alpha", "politics"};
    const auto pair = make_pair_context(*ds.find_image(politics, 1), *ds.find_image(politics, 3));

    ScriptedEndpoint judge({"<rating>3</rating><justification>same event</justification>"});
    const auto rating = score_llm(judge, nullptr, pair, {});
    CHECK(rating.score == 3);
    CHECK(rating.justification == "same event");
    CHECK(rating.raw_response.find("<rating>") != std::string::npos);
    REQUIRE(judge.calls.size() == 1);
    // direct pipeline: prompt text plus two image parts
    CHECK(judge.calls[0].size() == 3);
    CHECK(judge.calls[0][0].kind == MessagePart::Kind::Text);
    CHECK(judge.calls[0][1].kind == MessagePart::Kind::Image);
}

TEST_CASE("score_llm: retries identical prompt until parse succeeds") {
    const auto ds = load_dataset(semcache::testing::toy_manifest());
    const ScopeKey politics{"news-alpha", "politics"};
    const auto pair = make_pair_context(*ds.find_image(politics, 1), *ds.find_image(politics, 3));

    ScriptedEndpoint judge({"garbage", "also garbage", "<rating>1</rating>"});
    LlmScoreOptions options;
    options.max_attempts = 3;
    const auto rating = score_llm(judge, nullptr, pair, options);
    CHECK(rating.score == 1);
    REQUIRE(judge.calls.size() == 3);
    CHECK(judge.calls[0][0].content == judge.calls[2][0].content);

    ScriptedEndpoint hopeless({"garbage"});
    CHECK_THROWS_AS((void)score_llm(hopeless, nullptr, pair, options), RatingParseError);
    CHECK(hopeless.calls.size() == 3);  // exhausted all attempts
}

TEST_CASE("score_llm: two-step pipeline injects descriptions into the judge prompt") {
    const auto ds = load_dataset(semcache::testing::toy_manifest());
    const ScopeKey politics{"news-alpha", "politics"};
    const auto pair = make_pair_context(*ds.find_image(politics, 1), *ds.find_image(politics, 3));

    ScriptedEndpoint describer({"described image one", "described image two"});
    ScriptedEndpoint judge({"<rating>2</rating><justification>jx</justification>"});
    LlmScoreOptions options;
    options.pipeline = PipelineKind::TwoStep;

    const auto rating = score_llm(judge, &describer, pair, options);
    CHECK(rating.score == 2);
    CHECK(describer.calls.size() == 2);
    REQUIRE(judge.calls.size() == 1);
    REQUIRE(judge.calls[0].size() == 1);  // no image parts on the description path
    const std::string& prompt = judge.calls[0][0].content;
    CHECK(prompt.find("described image one") != std::string::npos);
    CHECK(prompt.find("described image two") != std::string::npos);

    // two-step without describer or precomputed descriptions is an error
    ScriptedEndpoint lonely({"<rating>2</rating>"});
    CHECK_THROWS_AS((void)score_llm(lonely, nullptr, pair, options), std::invalid_argument);
}

TEST_CASE("few-shot selection walks category, anchor image, then pair ids") {
    const auto train = load_dataset(semcache::testing::toy_manifest());
    const ScopeKey politics{"news-alpha", "politics"};
    const auto pair =
        make_pair_context(*train.find_image(politics, 1), *train.find_image(politics, 3));

    // category "politics" matches both politics matrices with similarity 1;
    // the first scope in order wins; image 1's own metadata makes it the anchor
    const auto selection = select_few_shot(pair, train, 5);
    CHECK(selection.truncated);  // only two inter-article comparisons involve image 1
    REQUIRE(selection.examples.size() == 2);
    CHECK(selection.examples[0].scope == politics);
    CHECK(selection.examples[0].id_a == 1);
    CHECK(selection.examples[0].id_b == 3);
    CHECK(selection.examples[0].score == 3);
    CHECK(selection.examples[1].id_a == 1);
    CHECK(selection.examples[1].id_b == 4);
    CHECK(selection.examples[1].score == 2);

    const auto exact = select_few_shot(pair, train, 2);
    CHECK_FALSE(exact.truncated);
    CHECK(exact.examples.size() == 2);

    // deterministic for a fixed similarity function
    const auto again = select_few_shot(pair, train, 5);
    REQUIRE(again.examples.size() == selection.examples.size());
    for (std::size_t i = 0; i < again.examples.size(); ++i) {
        CHECK(again.examples[i].id_a == selection.examples[i].id_a);
        CHECK(again.examples[i].id_b == selection.examples[i].id_b);
    }
}

TEST_CASE("token cosine similarity") {
    CHECK(token_cosine_similarity("Storm hits coast", "storm HITS coast") ==
          doctest::Approx(1.0));
    CHECK(token_cosine_similarity("alpha beta", "gamma delta") == 0.0);
    CHECK(token_cosine_similarity("", "anything") == 0.0);
}

TEST_CASE("cost per comparison reproduces the published table") {
    const auto table = default_price_table();
    REQUIRE(table.size() == 4);

    auto cost_of = [&](const std::string& name) {
        for (const auto& [entry_name, model] : table) {
            if (entry_name == name) return cost_per_comparison(model);
        }
        FAIL("missing model ", name);
        return 0.0;
    };

    CHECK(cost_of("claude-3.5-sonnet") == doctest::Approx(0.0084).epsilon(1e-9));
    CHECK(cost_of("gpt-4o") == doctest::Approx(0.00625).epsilon(1e-9));
    CHECK(cost_of("gemini-1.5-pro") == doctest::Approx(0.0015).epsilon(0.07));
    CHECK(cost_of("llama-3.1") == 0.0);

    CostModel zero;
    CHECK(cost_per_comparison(zero) == 0.0);

    CostModel invalid;
    invalid.input_price_per_token = -1.0;
    CHECK_THROWS_AS((void)cost_per_comparison(invalid), std::invalid_argument);
}
