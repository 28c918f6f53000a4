#include "semcache/metrics.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace semcache {
namespace {

void check_series(const RatingSeries& series) {
    if (series.empty()) {
        throw std::invalid_argument("rating series is empty");
    }
    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& pair = series[i];
        if (pair.predicted < kScaleMin || pair.predicted > kScaleMax ||
            pair.truth < kScaleMin || pair.truth > kScaleMax) {
            throw std::invalid_argument("rating pair " + std::to_string(i) +
                                        " outside 0..4: (" + std::to_string(pair.predicted) +
                                        ", " + std::to_string(pair.truth) + ")");
        }
    }
}

double kappa_weight(int i, int j, KappaWeighting weighting) {
    const double d = std::abs(i - j) / static_cast<double>(kScaleMax);
    return weighting == KappaWeighting::Linear ? d : d * d;
}

} // namespace

double nrmse(const RatingSeries& series) {
    check_series(series);
    double sum_sq = 0.0;
    for (const auto& pair : series) {
        const double err = pair.predicted - pair.truth;
        sum_sq += err * err;
    }
    return std::sqrt(sum_sq / static_cast<double>(series.size())) /
           static_cast<double>(kScaleMax);
}

std::optional<double> weighted_kappa(const RatingSeries& series, KappaWeighting weighting) {
    check_series(series);
    const double n = static_cast<double>(series.size());

    double observed[kNumClasses][kNumClasses] = {};
    double pred_marginal[kNumClasses] = {};
    double truth_marginal[kNumClasses] = {};
    for (const auto& pair : series) {
        observed[pair.predicted][pair.truth] += 1.0;
        pred_marginal[pair.predicted] += 1.0;
        truth_marginal[pair.truth] += 1.0;
    }

    double weighted_observed = 0.0;
    double weighted_expected = 0.0;
    for (int i = 0; i < kNumClasses; ++i) {
        for (int j = 0; j < kNumClasses; ++j) {
            const double w = kappa_weight(i, j, weighting);
            weighted_observed += w * observed[i][j];
            weighted_expected += w * pred_marginal[i] * truth_marginal[j] / n;
        }
    }
    if (weighted_expected == 0.0) {
        return std::nullopt;  // both raters constant and equal
    }
    return 1.0 - weighted_observed / weighted_expected;
}

WeightedPrf weighted_prf(const RatingSeries& series) {
    check_series(series);
    const double n = static_cast<double>(series.size());

    double tp[kNumClasses] = {};
    double fp[kNumClasses] = {};
    double fn[kNumClasses] = {};
    double support[kNumClasses] = {};
    for (const auto& pair : series) {
        support[pair.truth] += 1.0;
        if (pair.predicted == pair.truth) {
            tp[pair.truth] += 1.0;
        } else {
            fp[pair.predicted] += 1.0;
            fn[pair.truth] += 1.0;
        }
    }

    WeightedPrf result;
    for (int c = 0; c < kNumClasses; ++c) {
        const double weight = support[c] / n;
        if (weight == 0.0) continue;
        const double p_den = tp[c] + fp[c];
        const double r_den = tp[c] + fn[c];
        const double precision = p_den > 0.0 ? tp[c] / p_den : 0.0;
        const double recall = r_den > 0.0 ? tp[c] / r_den : 0.0;
        const double f1 =
            (precision + recall) > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
        result.precision += weight * precision;
        result.recall += weight * recall;
        result.f1 += weight * f1;
    }
    return result;
}

ConfusionMatrix confusion_matrix(const RatingSeries& series, ConfusionNormalize normalize) {
    check_series(series);
    ConfusionMatrix matrix;
    matrix.normalize = normalize;
    for (const auto& pair : series) {
        matrix.cells[static_cast<std::size_t>(pair.truth)]
                    [static_cast<std::size_t>(pair.predicted)] += 1.0;
    }
    for (int row = 0; row < kNumClasses; ++row) {
        double total = 0.0;
        for (double cell : matrix.cells[static_cast<std::size_t>(row)]) total += cell;
        matrix.zero_support[static_cast<std::size_t>(row)] = total == 0.0;
        if (normalize == ConfusionNormalize::Row && total > 0.0) {
            for (double& cell : matrix.cells[static_cast<std::size_t>(row)]) cell /= total;
        }
    }
    return matrix;
}

double krippendorff_alpha_ordinal(const std::vector<int>& rater_a,
                                  const std::vector<int>& rater_b) {
    if (rater_a.empty() || rater_a.size() != rater_b.size()) {
        throw std::invalid_argument("krippendorff: raters must be aligned and non-empty");
    }
    for (std::size_t i = 0; i < rater_a.size(); ++i) {
        if (rater_a[i] < kScaleMin || rater_a[i] > kScaleMax || rater_b[i] < kScaleMin ||
            rater_b[i] > kScaleMax) {
            throw std::invalid_argument("krippendorff: rating at " + std::to_string(i) +
                                        " outside 0..4");
        }
    }

    // Coincidence matrix: each unit contributes both ordered value pairs.
    double coincidence[kNumClasses][kNumClasses] = {};
    for (std::size_t i = 0; i < rater_a.size(); ++i) {
        coincidence[rater_a[i]][rater_b[i]] += 1.0;
        coincidence[rater_b[i]][rater_a[i]] += 1.0;
    }
    double marginal[kNumClasses] = {};
    double total = 0.0;
    for (int c = 0; c < kNumClasses; ++c) {
        for (int k = 0; k < kNumClasses; ++k) marginal[c] += coincidence[c][k];
        total += marginal[c];
    }

    // Ordinal distance: running sum of marginals between the two ranks,
    // with the endpoints counted by half.
    auto ordinal_delta_sq = [&](int c, int k) {
        const int lo = std::min(c, k);
        const int hi = std::max(c, k);
        double between = 0.0;
        for (int g = lo; g <= hi; ++g) between += marginal[g];
        between -= (marginal[lo] + marginal[hi]) / 2.0;
        return between * between;
    };

    double observed_disagreement = 0.0;
    double expected_disagreement = 0.0;
    for (int c = 0; c < kNumClasses; ++c) {
        for (int k = 0; k < kNumClasses; ++k) {
            if (c == k) continue;
            const double d = ordinal_delta_sq(c, k);
            observed_disagreement += coincidence[c][k] * d;
            expected_disagreement += marginal[c] * marginal[k] * d / (total - 1.0);
        }
    }
    if (expected_disagreement == 0.0) {
        return 1.0;  // every rating identical: perfect agreement
    }
    return 1.0 - observed_disagreement / expected_disagreement;
}

double pooled_std(const std::vector<std::vector<double>>& groups) {
    if (groups.empty()) {
        throw std::invalid_argument("pooled_std: no groups");
    }
    double weighted_variance = 0.0;
    double dof = 0.0;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const auto& samples = groups[g];
        if (samples.size() < 2) {
            throw std::invalid_argument("pooled_std: group " + std::to_string(g) +
                                        " has fewer than 2 samples");
        }
        double mean = 0.0;
        for (double v : samples) mean += v;
        mean /= static_cast<double>(samples.size());
        double ss = 0.0;
        for (double v : samples) ss += (v - mean) * (v - mean);
        weighted_variance += ss;  // ss = (n-1) * sample variance
        dof += static_cast<double>(samples.size() - 1);
    }
    return std::sqrt(weighted_variance / dof);
}

double useful_fraction(const ReplaceabilityMatrix& matrix, int threshold) {
    if (threshold < 1 || threshold > 4) {
        throw std::invalid_argument("useful_fraction: threshold outside 1..4");
    }
    const auto& ids = matrix.ids();
    std::uint64_t inter_article = 0;
    std::uint64_t useful = 0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        for (std::size_t j = i + 1; j < ids.size(); ++j) {
            if (matrix.article_of(ids[i]) == matrix.article_of(ids[j])) continue;
            ++inter_article;
            if (matrix.score(ids[i], ids[j]) >= threshold) ++useful;
        }
    }
    if (inter_article == 0) return 0.0;
    return static_cast<double>(useful) / static_cast<double>(inter_article);
}

} // namespace semcache
