#pragma once

#include "semcache/core.hpp"

#include <array>
#include <cstdint>

namespace semcache::testing {

// Seeded generator for simulation-scale datasets with a class skew close to
// real news-site annotations: ~90.5% of inter-article pairs score 0.
struct SyntheticSpec {
    int websites = 20;
    int categories_per_website = 5;
    int articles_per_category = 10;
    int images_per_article = 2;
    std::uint64_t seed = 1234;
    // Per-mille mass for scores 1..4; score 0 takes the remainder (905).
    std::array<int, 4> score_per_mille = {30, 28, 19, 18};
};

Dataset make_synthetic_dataset(const SyntheticSpec& spec);

} // namespace semcache::testing
