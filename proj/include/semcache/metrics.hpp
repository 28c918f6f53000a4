#pragma once

#include "semcache/core.hpp"

#include <array>
#include <optional>
#include <vector>

namespace semcache {

inline constexpr int kScaleMin = 0;
inline constexpr int kScaleMax = 4;
inline constexpr int kNumClasses = 5;

struct RatingPair {
    int predicted = 0;  // 0..4
    int truth = 0;      // 0..4
};

// Aligned (predicted, truth) ordinal labels. Every metric validates that all
// values lie in 0..4 and the series is non-empty.
using RatingSeries = std::vector<RatingPair>;

// Root mean square error normalized by the scale range (4), so the result
// lies in [0, 1] with 1 = every prediction maximally wrong.
double nrmse(const RatingSeries& series);

enum class KappaWeighting { Linear, Quadratic };

// Weighted Cohen's kappa: 1 - sum(w*O) / sum(w*E) over the 5x5 contingency
// table, w_ij = |i-j|/4 (linear) or ((i-j)/4)^2 (quadratic). Returns nullopt
// when both raters are constant and identical (chance disagreement is zero,
// kappa undefined).
std::optional<double> weighted_kappa(const RatingSeries& series, KappaWeighting weighting);

struct WeightedPrf {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// One-vs-rest precision/recall/F1 per class, averaged with weights equal to
// true-class frequencies. Classes absent from the truth contribute zero
// weight; a zero denominator yields 0 for that class.
WeightedPrf weighted_prf(const RatingSeries& series);

enum class ConfusionNormalize { None, Row };

struct ConfusionMatrix {
    // rows = truth, columns = predicted
    std::array<std::array<double, kNumClasses>, kNumClasses> cells = {};
    std::array<bool, kNumClasses> zero_support = {};  // truth rows with no samples
    ConfusionNormalize normalize = ConfusionNormalize::None;
};

ConfusionMatrix confusion_matrix(const RatingSeries& series, ConfusionNormalize normalize);

// Two-observer Krippendorff's alpha with ordinal difference weights over the
// coincidence matrix. Inputs must be aligned and fully paired. When every
// rating is identical the expected disagreement is zero and agreement is
// perfect; returns 1 in that case.
double krippendorff_alpha_ordinal(const std::vector<int>& rater_a,
                                  const std::vector<int>& rater_b);

// sqrt( sum (n_i - 1) s_i^2 / sum (n_i - 1) ); every group needs >= 2 samples.
double pooled_std(const std::vector<std::vector<double>>& groups);

// Fraction of inter-article unordered pairs whose score meets threshold t.
// Feeds u_t of the savings model. Same-article pairs are excluded from both
// numerator and denominator.
double useful_fraction(const ReplaceabilityMatrix& matrix, int threshold);

} // namespace semcache
