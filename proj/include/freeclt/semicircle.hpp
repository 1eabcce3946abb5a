#pragma once

#include "freeclt/measure.hpp"

namespace freeclt {

/// Semicircle law with the given center and variance; the standard law
/// (center 0, variance 1) lives on [-2, 2].
class SemicircleLaw {
public:
    SemicircleLaw() = default;
    SemicircleLaw(double center, double variance);

    static SemicircleLaw standard() { return {}; }

    double center() const { return center_; }
    double variance() const { return variance_; }
    double radius() const;  // 2 * sqrt(variance)
    double support_min() const { return center_ - radius(); }
    double support_max() const { return center_ + radius(); }

    double density(double x) const;
    double density_derivative(double x) const;
    double cdf(double x) const;

private:
    double center_ = 0.0;
    double variance_ = 1.0;
};

/// Standard semicircle CDF: 1/2 + x sqrt(4 - x^2) / (4 pi) + asin(x / 2) / pi
/// on [-2, 2], clamped to 0 and 1 outside.
double standard_semicircle_cdf(double x);
double standard_semicircle_density(double x);

/// Piecewise-linear discretization on `points` nodes clustered towards the
/// support edges (x = 2 sin(theta) with theta uniform). The result has unit
/// mass and the law's exact mean and variance.
Measure as_measure(const SemicircleLaw& law, int points);

/// sup_x |mu((-inf, x]) - law((-inf, x])|, computed exactly up to root
/// finding inside each breakpoint interval of mu.
double kolmogorov_distance(const Measure& mu, const SemicircleLaw& law);

/// sup_x |F(x + q) - F(x)| for the standard semicircle CDF F.
double shift_deviation(double q);
/// sup_x |F(p x) - F(x)| for the standard semicircle CDF F, p > 0.
double scale_deviation(double p);

}  // namespace freeclt
