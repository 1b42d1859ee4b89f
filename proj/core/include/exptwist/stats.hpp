#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace exptwist {

// Neumaier compensated accumulator. Order-dependent but immune to
// catastrophic cancellation at the 1e5-term scale used here.
class KahanSum {
public:
    void add(double x) {
        double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline double compensated_sum(std::span<const double> xs) {
    KahanSum s;
    for (double x : xs) s.add(x);
    return s.value();
}

inline double mean(std::span<const double> xs) {
    if (xs.empty()) throw std::invalid_argument("mean: empty sample");
    return compensated_sum(xs) / static_cast<double>(xs.size());
}

// Unbiased sample variance.
inline double variance(std::span<const double> xs) {
    if (xs.size() < 2) return 0.0;
    const double m = mean(xs);
    KahanSum s;
    for (double x : xs) s.add((x - m) * (x - m));
    return s.value() / static_cast<double>(xs.size() - 1);
}

inline double stddev(std::span<const double> xs) { return std::sqrt(variance(xs)); }

// Standard error of the sample mean.
inline double std_error(std::span<const double> xs) {
    if (xs.empty()) return 0.0;
    return stddev(xs) / std::sqrt(static_cast<double>(xs.size()));
}

// Empirical quantile edges splitting the sample into n_bins equal-mass bins.
// Returns n_bins-1 interior edges, sorted.
inline std::vector<double> quantile_edges(std::vector<double> xs, std::size_t n_bins) {
    if (xs.empty()) throw std::invalid_argument("quantile_edges: empty sample");
    if (n_bins < 2) return {};
    std::sort(xs.begin(), xs.end());
    std::vector<double> edges;
    edges.reserve(n_bins - 1);
    for (std::size_t b = 1; b < n_bins; ++b) {
        const double q = static_cast<double>(b) / static_cast<double>(n_bins);
        const double pos = q * static_cast<double>(xs.size() - 1);
        const auto lo = static_cast<std::size_t>(pos);
        const double frac = pos - static_cast<double>(lo);
        const double e = lo + 1 < xs.size()
                             ? xs[lo] + frac * (xs[lo + 1] - xs[lo])
                             : xs[lo];
        edges.push_back(e);
    }
    return edges;
}

// Regularized lower incomplete gamma P(a, x), series + continued fraction.
double gamma_p(double a, double x);

inline double gamma_q(double a, double x) { return 1.0 - gamma_p(a, x); }

// Survival function of the chi-square distribution with k dof.
inline double chi_square_sf(double stat, double dof) {
    return gamma_q(0.5 * dof, 0.5 * stat);
}

// E|Z|^p for Z standard normal.
inline double abs_normal_moment(double p) {
    return std::pow(2.0, 0.5 * p) * std::tgamma(0.5 * (p + 1.0)) /
           std::sqrt(M_PI);
}

}  // namespace exptwist
