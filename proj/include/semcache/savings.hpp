#pragma once

#include <array>
#include <vector>

namespace semcache {

inline constexpr int kIdOverheadBytes = 2;  // one appended 16-bit image id

// Inputs of the closed-form byte-savings model. All sizes in bytes;
// presentation layers convert to MB (1 MB = 1e6 bytes).
struct SavingsParams {
    int comparisons = 0;                         // N, average comparisons per category
    std::array<double, 4> useful = {};           // u_t for t = 1..4, fraction of comparisons
    double avg_image_bytes = 0.0;                // S
    int cached_images = 0;                       // X, default operating point
    double page_weight_bytes = 0.0;              // P
    double images_per_article = 0.0;             // I
    int id_overhead_bytes = kIdOverheadBytes;

    double useful_at(int threshold) const;       // threshold in 1..4

    // Enforces: u non-increasing in t, 0 <= u_t <= 1, X <= N, sizes positive.
    void validate() const;
};

// Probability that a request is served from a cache of X images when
// `useful` of the N category images are acceptable substitutes:
//   p = 1 - C(N - useful, X) / C(N, X)
// Evaluated as a telescoping product so N in the hundreds cannot overflow.
// Returns 1 exactly when X > N - useful. Throws std::invalid_argument
// outside 0 <= useful <= N, 0 <= X <= N.
double hit_probability(int n, int useful, int x);

// Expected byte savings per request at threshold t with X cached images:
//   mu_t = S * p - overhead * X,  useful = round(N * u_t)
// May be negative when the id overhead exceeds the expected body savings.
double expected_savings(const SavingsParams& params, int threshold, int x);

// Fraction of page weight saved per article access: M_t = mu * I / P.
double page_weight_reduction(double mu_bytes, double images_per_article,
                             double page_weight_bytes);

struct CurvePoint {
    int x = 0;
    double hit_probability = 0.0;
    double mu_bytes = 0.0;
    double page_weight_fraction = 0.0;
};

// expected_savings evaluated pointwise for X = 0..x_max.
std::vector<CurvePoint> savings_curve(const SavingsParams& params, int threshold, int x_max);

} // namespace semcache
