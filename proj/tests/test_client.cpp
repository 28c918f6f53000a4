#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "semcache/client.hpp"
#include "support/fixtures.hpp"
#include "support/synthetic.hpp"

#include <numeric>

using namespace semcache;

namespace {

// Three single-image articles, every inter-article pair completely
// replaceable.
Dataset all_fours_dataset() {
    Dataset ds;
    ds.website_names = {"w"};
    std::vector<ImageId> ids{1, 2, 3};
    std::unordered_map<ImageId, std::string> articles{{1, "a1"}, {2, "a2"}, {3, "a3"}};
    std::vector<std::uint8_t> scores{4, 4, 4, 4, 4, 4, 4, 4, 4};
    ds.matrices.emplace(ScopeKey{"w", "c"},
                        ReplaceabilityMatrix("w", "c", ids, articles, scores));
    for (ImageId id : ids) {
        ImageRecord rec;
        rec.website = "w";
        rec.category = "c";
        rec.article_id = articles[id];
        rec.image_id = id;
        rec.byte_size = 1000u * id;
        rec.heading = "h";
        ds.images.push_back(rec);
    }
    ds.rebuild_index();
    return ds;
}

} // namespace

TEST_CASE("fetch: cold cache downloads, repeats hit exactly") {
    const auto ds = load_dataset(semcache::testing::toy_manifest());
    LocalOrigin origin(ds);
    const auto& image = *ds.find_image({"news-alpha", "politics"}, 4);

    for (FetchMode mode : {FetchMode::Exact, FetchMode::Semantic}) {
        ClientCache cache;
        const auto first = cache.fetch(origin, image, 1, mode, false);
        CHECK(first.source == FetchOutcome::Source::Download);
        CHECK(first.bytes_charged == 60000);

        const auto second = cache.fetch(origin, image, 1, mode, false);
        CHECK(second.source == FetchOutcome::Source::ExactHit);
        CHECK(second.bytes_charged == 0);
    }
}

TEST_CASE("fetch: semantic hit charges overhead only and does not insert") {
    const auto ds = load_dataset(semcache::testing::toy_manifest());
    LocalOrigin origin(ds);
    const ScopeKey scope{"news-alpha", "politics"};
    const auto& img3 = *ds.find_image(scope, 3);
    const auto& img1 = *ds.find_image(scope, 1);  // score(1,3) = 3

    ClientCache cache;
    cache.fetch(origin, img3, 1, FetchMode::Semantic, true);

    const auto hit = cache.fetch(origin, img1, 1, FetchMode::Semantic, true);
    CHECK(hit.source == FetchOutcome::Source::SemanticHit);
    CHECK(hit.substitute_id == 3);
    CHECK(hit.bytes_charged == 2);  // one cached id appended
    CHECK_FALSE(cache.contains(scope, 1));

    // still a semantic hit on re-request: the requested id was never inserted
    const auto again = cache.fetch(origin, img1, 1, FetchMode::Semantic, true);
    CHECK(again.source == FetchOutcome::Source::SemanticHit);
    CHECK(cache.counters().semantic_hits == 2);
    CHECK(cache.counters().overhead_bytes == 4);
}

TEST_CASE("fetch: overhead is counted but not charged when disabled") {
    const auto ds = load_dataset(semcache::testing::toy_manifest());
    LocalOrigin origin(ds);
    const ScopeKey scope{"news-alpha", "politics"};

    ClientCache cache;
    cache.fetch(origin, *ds.find_image(scope, 3), 1, FetchMode::Semantic, false);
    const auto hit = cache.fetch(origin, *ds.find_image(scope, 1), 1, FetchMode::Semantic, false);
    CHECK(hit.bytes_charged == 0);
    CHECK(cache.counters().overhead_bytes == 2);
}

TEST_CASE("fetch: below-threshold scores download the body") {
    const auto ds = load_dataset(semcache::testing::toy_manifest());
    LocalOrigin origin(ds);
    const ScopeKey scope{"news-alpha", "politics"};

    ClientCache cache;
    cache.fetch(origin, *ds.find_image(scope, 4), 4, FetchMode::Semantic, false);
    const auto miss = cache.fetch(origin, *ds.find_image(scope, 1), 4, FetchMode::Semantic, false);
    CHECK(miss.source == FetchOutcome::Source::Download);  // score(1,4)=2 < 4
    CHECK(miss.bytes_charged == 120000);
    CHECK(cache.contains(scope, 1));
}

TEST_CASE("hand-traced sequence on an all-fours category") {
    const auto ds = all_fours_dataset();
    LocalOrigin origin(ds);
    const ScopeKey scope{"w", "c"};
    const auto* img1 = ds.find_image(scope, 1);
    const auto* img2 = ds.find_image(scope, 2);
    const auto* img3 = ds.find_image(scope, 3);

    ClientCache exact;
    ClientCache semantic;
    std::uint64_t exact_total = 0;
    std::uint64_t semantic_total = 0;
    for (const auto* image : {img1, img2, img3, img1}) {
        exact_total += exact.fetch(origin, *image, 1, FetchMode::Exact, false).bytes_charged;
        semantic_total +=
            semantic.fetch(origin, *image, 1, FetchMode::Semantic, false).bytes_charged;
    }
    // exact: 1000 + 2000 + 3000 + repeat hit; semantic: only the first body
    CHECK(exact_total == 6000);
    CHECK(semantic_total == 1000);
    CHECK(semantic.counters().semantic_hits == 2);
    CHECK(semantic.counters().exact_hits == 1);
}

TEST_CASE("lru policy caps entries and evicts the least recent") {
    const auto ds = all_fours_dataset();
    LocalOrigin origin(ds);
    const ScopeKey scope{"w", "c"};

    ClientCache cache(CachePolicy::lru(2));
    cache.fetch(origin, *ds.find_image(scope, 1), 4, FetchMode::Exact, false);
    cache.fetch(origin, *ds.find_image(scope, 2), 4, FetchMode::Exact, false);
    cache.fetch(origin, *ds.find_image(scope, 1), 4, FetchMode::Exact, false);  // touch 1
    cache.fetch(origin, *ds.find_image(scope, 3), 4, FetchMode::Exact, false);  // evicts 2

    CHECK(cache.entry_count() == 2);
    CHECK(cache.contains(scope, 1));
    CHECK_FALSE(cache.contains(scope, 2));
    CHECK(cache.contains(scope, 3));
}

TEST_CASE("simulation: all-zero matrices never beat exact caching") {
    semcache::testing::SyntheticSpec spec;
    spec.websites = 4;
    spec.categories_per_website = 2;
    spec.articles_per_category = 5;
    spec.score_per_mille = {0, 0, 0, 0};
    const auto ds = semcache::testing::make_synthetic_dataset(spec);

    SimConfig config;
    config.frequented_websites = 2;
    config.requests = 15;
    config.trials = 20;
    config.rng_seed = 99;
    const auto result = run_simulation(ds, config);
    for (const auto& trial : result.trials) {
        CHECK(trial.semantic_bytes == trial.exact_bytes);
        CHECK(trial.savings_pct == 0.0);
    }
}

TEST_CASE("simulation: semantic never exceeds exact with overhead off") {
    semcache::testing::SyntheticSpec spec;
    spec.websites = 6;
    spec.categories_per_website = 3;
    spec.articles_per_category = 6;
    const auto ds = semcache::testing::make_synthetic_dataset(spec);

    SimConfig config;
    config.frequented_websites = 2;
    config.requests = 25;
    config.trials = 40;
    config.rng_seed = 7;
    const auto result = run_simulation(ds, config);
    for (const auto& trial : result.trials) {
        CHECK(trial.semantic_bytes <= trial.exact_bytes);
    }
}

TEST_CASE("simulation: overhead-on totals stay within the charged overhead") {
    const auto ds = all_fours_dataset();
    LocalOrigin origin(ds);
    const ScopeKey scope{"w", "c"};

    ClientCache exact;
    ClientCache semantic;
    std::uint64_t exact_total = 0;
    std::uint64_t semantic_total = 0;
    for (ImageId id : {1, 2, 3, 2, 1}) {
        const auto& image = *ds.find_image(scope, id);
        exact_total += exact.fetch(origin, image, 1, FetchMode::Exact, true).bytes_charged;
        semantic_total += semantic.fetch(origin, image, 1, FetchMode::Semantic, true).bytes_charged;
    }
    CHECK(semantic_total <= exact_total + semantic.counters().overhead_bytes);
}

TEST_CASE("simulation is deterministic for a fixed seed") {
    semcache::testing::SyntheticSpec spec;
    spec.websites = 5;
    spec.categories_per_website = 2;
    spec.articles_per_category = 5;
    const auto ds = semcache::testing::make_synthetic_dataset(spec);

    SimConfig config;
    config.frequented_websites = 3;
    config.requests = 20;
    config.trials = 10;
    config.rng_seed = 4242;

    const auto a = run_simulation(ds, config);
    const auto b = run_simulation(ds, config);
    REQUIRE(a.trials.size() == b.trials.size());
    for (std::size_t i = 0; i < a.trials.size(); ++i) {
        CHECK(a.trials[i].exact_bytes == b.trials[i].exact_bytes);
        CHECK(a.trials[i].semantic_bytes == b.trials[i].semantic_bytes);
    }
}

TEST_CASE("simulation: mean savings is non-increasing in threshold") {
    semcache::testing::SyntheticSpec spec;
    spec.websites = 6;
    spec.categories_per_website = 3;
    spec.articles_per_category = 8;
    const auto ds = semcache::testing::make_synthetic_dataset(spec);

    double previous = 1e9;
    for (int t = 1; t <= 4; ++t) {
        SimConfig config;
        config.frequented_websites = 1;
        config.requests = 30;
        config.trials = 60;
        config.threshold = t;
        config.rng_seed = 11;
        const auto summary = summarize(run_simulation(ds, config));
        CHECK(summary.mean <= previous + 1e-9);
        previous = summary.mean;
    }
}

TEST_CASE("simulation rejects FW larger than the website count") {
    const auto ds = all_fours_dataset();
    SimConfig config;
    config.frequented_websites = 2;
    CHECK_THROWS_AS((void)run_simulation(ds, config), std::invalid_argument);
}

TEST_CASE("duplicate-only request sequences cost one image") {
    const auto ds = all_fours_dataset();
    LocalOrigin origin(ds);
    const auto& image = *ds.find_image({"w", "c"}, 2);

    ClientCache exact;
    std::uint64_t total = 0;
    for (int i = 0; i < 10; ++i) {
        total += exact.fetch(origin, image, 1, FetchMode::Exact, false).bytes_charged;
    }
    CHECK(total == image.byte_size);
}

TEST_CASE("summarize quartiles") {
    SimResult single;
    single.trials.push_back({100, 80, 20.0});
    const auto s = summarize(single);
    CHECK(s.mean == 20.0);
    CHECK(s.median == 20.0);
    CHECK(s.q1 == 20.0);
    CHECK(s.q3 == 20.0);
    CHECK(s.min == 20.0);
    CHECK(s.max == 20.0);

    SimResult constant;
    for (int i = 0; i < 100; ++i) constant.trials.push_back({100, 90, 10.0});
    const auto c = summarize(constant);
    CHECK(c.q3 - c.q1 == 0.0);

    SimResult mixed;
    for (double v : {1.0, 2.0, 3.0, 4.0}) mixed.trials.push_back({100, 50, v});
    const auto m = summarize(mixed);
    CHECK(m.mean == doctest::Approx(2.5));
    CHECK(m.median == doctest::Approx(2.5));
    CHECK(m.q1 == doctest::Approx(1.75));
    CHECK(m.q3 == doctest::Approx(3.25));

    const double recomputed =
        std::accumulate(mixed.trials.begin(), mixed.trials.end(), 0.0,
                        [](double acc, const TrialRecord& r) { return acc + r.savings_pct; }) /
        static_cast<double>(mixed.trials.size());
    CHECK(m.mean == doctest::Approx(recomputed));

    CHECK_THROWS_AS((void)summarize(SimResult{}), std::invalid_argument);
}
