#include "semcache/savings.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace semcache {

double SavingsParams::useful_at(int threshold) const {
    if (threshold < 1 || threshold > 4) {
        throw std::invalid_argument("threshold must be in 1..4, got " +
                                    std::to_string(threshold));
    }
    return useful[static_cast<std::size_t>(threshold - 1)];
}

void SavingsParams::validate() const {
    if (comparisons <= 0) {
        throw std::invalid_argument("N must be positive");
    }
    for (std::size_t i = 0; i < useful.size(); ++i) {
        if (useful[i] < 0.0 || useful[i] > 1.0) {
            throw std::invalid_argument("u_" + std::to_string(i + 1) + " outside [0,1]");
        }
        if (i > 0 && useful[i] > useful[i - 1]) {
            throw std::invalid_argument("u must be non-increasing in t (u_" +
                                        std::to_string(i) + " < u_" + std::to_string(i + 1) + ")");
        }
    }
    if (cached_images < 0 || cached_images > comparisons) {
        throw std::invalid_argument("X must satisfy 0 <= X <= N");
    }
    if (avg_image_bytes <= 0.0 || page_weight_bytes <= 0.0 || images_per_article <= 0.0) {
        throw std::invalid_argument("S, P and I must be positive");
    }
    if (id_overhead_bytes < 0) {
        throw std::invalid_argument("id overhead must be non-negative");
    }
}

double hit_probability(int n, int useful, int x) {
    if (n < 0 || useful < 0 || useful > n || x < 0 || x > n) {
        throw std::invalid_argument("hit_probability: need 0 <= useful <= N and 0 <= X <= N, got N=" +
                                    std::to_string(n) + " useful=" + std::to_string(useful) +
                                    " X=" + std::to_string(x));
    }
    // C(n-useful, x) / C(n, x) = prod_{i=0}^{x-1} (n - useful - i) / (n - i).
    // A zero numerator term means x > n - useful: the cache must contain a
    // useful image (pigeonhole), so p = 1.
    double miss_ratio = 1.0;
    for (int i = 0; i < x; ++i) {
        const double numerator = static_cast<double>(n - useful - i);
        if (numerator <= 0.0) return 1.0;
        miss_ratio *= numerator / static_cast<double>(n - i);
    }
    return 1.0 - miss_ratio;
}

double expected_savings(const SavingsParams& params, int threshold, int x) {
    params.validate();
    if (x < 0 || x > params.comparisons) {
        throw std::invalid_argument("expected_savings: X outside 0..N");
    }
    const int useful_count =
        static_cast<int>(std::llround(params.comparisons * params.useful_at(threshold)));
    const double p = hit_probability(params.comparisons, useful_count, x);
    return params.avg_image_bytes * p - static_cast<double>(params.id_overhead_bytes) * x;
}

double page_weight_reduction(double mu_bytes, double images_per_article,
                             double page_weight_bytes) {
    if (images_per_article <= 0.0 || page_weight_bytes <= 0.0) {
        throw std::invalid_argument("page_weight_reduction: I and P must be positive");
    }
    return mu_bytes * images_per_article / page_weight_bytes;
}

std::vector<CurvePoint> savings_curve(const SavingsParams& params, int threshold, int x_max) {
    params.validate();
    if (x_max < 0 || x_max > params.comparisons) {
        throw std::invalid_argument("savings_curve: x_max outside 0..N");
    }
    const int useful_count =
        static_cast<int>(std::llround(params.comparisons * params.useful_at(threshold)));
    std::vector<CurvePoint> curve;
    curve.reserve(static_cast<std::size_t>(x_max) + 1);
    for (int x = 0; x <= x_max; ++x) {
        CurvePoint point;
        point.x = x;
        point.hit_probability = hit_probability(params.comparisons, useful_count, x);
        point.mu_bytes = params.avg_image_bytes * point.hit_probability -
                         static_cast<double>(params.id_overhead_bytes) * x;
        point.page_weight_fraction = page_weight_reduction(
            point.mu_bytes, params.images_per_article, params.page_weight_bytes);
        curve.push_back(point);
    }
    return curve;
}

} // namespace semcache
