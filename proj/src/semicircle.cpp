#include "freeclt/semicircle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "freeclt/error.hpp"

namespace freeclt {

namespace {

constexpr double kPi = std::numbers::pi;

// Sup of |h| on [lo, hi] over a uniform grid, doubling the resolution until
// the estimate moves by less than 1e-9.
template <typename H>
double grid_supremum(H&& h, double lo, double hi) {
    auto scan = [&](long points) {
        double best = std::max(std::abs(h(lo)), std::abs(h(hi)));
        const double step = (hi - lo) / static_cast<double>(points - 1);
        for (long i = 1; i + 1 < points; ++i) best = std::max(best, std::abs(h(lo + step * i)));
        return best;
    };
    long points = 100001;
    double sup = scan(points);
    for (int round = 0; round < 6; ++round) {
        points = 2 * points - 1;
        const double refined = scan(points);
        const double change = std::abs(refined - sup);
        sup = std::max(sup, refined);
        if (change < 1e-9) break;
    }
    return sup;
}

}  // namespace

SemicircleLaw::SemicircleLaw(double center, double variance) : center_(center), variance_(variance) {
    if (!std::isfinite(center) || !std::isfinite(variance) || !(variance > 0.0))
        throw InvalidInput("semicircle: variance must be positive and finite");
}

double SemicircleLaw::radius() const { return 2.0 * std::sqrt(variance_); }

double standard_semicircle_density(double x) {
    if (std::abs(x) >= 2.0) return 0.0;
    return std::sqrt(4.0 - x * x) / (2.0 * kPi);
}

double standard_semicircle_cdf(double x) {
    if (x <= -2.0) return 0.0;
    if (x >= 2.0) return 1.0;
    if (x == 0.0) return 0.5;
    const double v = 0.5 + x * std::sqrt(4.0 - x * x) / (4.0 * kPi) + std::asin(0.5 * x) / kPi;
    return std::clamp(v, 0.0, 1.0);
}

double SemicircleLaw::density(double x) const {
    const double sigma = std::sqrt(variance_);
    return standard_semicircle_density((x - center_) / sigma) / sigma;
}

double SemicircleLaw::density_derivative(double x) const {
    const double sigma = std::sqrt(variance_);
    const double y = (x - center_) / sigma;
    if (std::abs(y) >= 2.0) return 0.0;
    return -y / (2.0 * kPi * std::sqrt(4.0 - y * y)) / variance_;
}

double SemicircleLaw::cdf(double x) const {
    return standard_semicircle_cdf((x - center_) / std::sqrt(variance_));
}

Measure as_measure(const SemicircleLaw& law, int points) {
    if (points < 64) throw InvalidInput("as_measure: need at least 64 points");
    const double r = law.radius();
    std::vector<double> grid(static_cast<std::size_t>(points));
    std::vector<double> density(grid.size());
    for (int k = 0; k < points; ++k) {
        // Symmetric node placement: node k and node points-1-k mirror exactly.
        const double theta = -0.5 * kPi + kPi * k / (points - 1);
        const double s = (2 * k == points - 1) ? 0.0 : std::sin(theta);
        grid[k] = r * s;
    }
    for (int k = 0; k < points / 2; ++k) grid[points - 1 - k] = -grid[k];
    grid.front() = -r;
    grid.back() = r;
    for (int k = 0; k < points; ++k)
        density[k] = (k == 0 || k == points - 1) ? 0.0 : std::sqrt(std::max(0.0, r * r - grid[k] * grid[k])) * 2.0 / (kPi * r * r);

    double mass = 0.0, second = 0.0;
    for (int k = 0; k + 1 < points; ++k) {
        const double h = grid[k + 1] - grid[k];
        mass += 0.5 * (density[k] + density[k + 1]) * h;
    }
    for (auto& v : density) v /= mass;
    {
        const auto tmp = Measure::from_parts({}, grid, density);
        second = moment(tmp, 2);
    }
    // Stretch about the center so the variance is exact.
    const double stretch = std::sqrt(law.variance() / second);
    for (int k = 0; k < points; ++k) {
        grid[k] = law.center() + grid[k] * stretch;
        density[k] /= stretch;
    }
    return Measure::from_parts({}, std::move(grid), std::move(density));
}

double kolmogorov_distance(const Measure& mu, const SemicircleLaw& law) {
    auto pts = mu.breakpoints();
    pts.push_back(law.support_min());
    pts.push_back(law.support_max());
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

    double sup = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double x = pts[i];
        const double f = law.cdf(x);
        sup = std::max({sup, std::abs(mu.cdf(x) - f), std::abs(mu.cdf_left(x) - f)});
        if (i + 1 == pts.size()) break;
        const double p = x, q = pts[i + 1];
        if (p >= law.support_max() || q <= law.support_min()) continue;  // D monotone there
        const auto [fp, fq] = linear_density_between(mu, p, q);
        const double slope = (fq - fp) / (q - p);
        // g = (linear density) - (semicircle density) is convex on (p, q);
        // the stationary points of the CDF difference are the roots of g.
        auto g = [&](double y) { return fp + slope * (y - p) - law.density(y); };
        auto dg = [&](double y) { return slope - law.density_derivative(y); };
        double lo = p, hi = q;
        for (int it = 0; it < 60 && hi - lo > 1e-15 * (1.0 + std::abs(lo)); ++it) {
            const double m = 0.5 * (lo + hi);
            (dg(m) < 0.0 ? lo : hi) = m;
        }
        const double m = 0.5 * (lo + hi);
        if (!(g(m) < 0.0)) continue;
        auto root = [&](double a, double b) {
            // g(a) and g(b) have opposite signs.
            const bool a_neg = g(a) < 0.0;
            for (int it = 0; it < 60 && b - a > 1e-15 * (1.0 + std::abs(a)); ++it) {
                const double c = 0.5 * (a + b);
                ((g(c) < 0.0) == a_neg ? a : b) = c;
            }
            return 0.5 * (a + b);
        };
        for (double y : {root(p, m), root(m, q)}) sup = std::max(sup, std::abs(mu.cdf(y) - law.cdf(y)));
    }
    return std::min(1.0, sup);
}

double shift_deviation(double q) {
    if (!std::isfinite(q)) throw InvalidInput("shift_deviation: q must be finite");
    if (q == 0.0) return 0.0;
    auto h = [q](double x) { return standard_semicircle_cdf(x + q) - standard_semicircle_cdf(x); };
    return grid_supremum(h, -2.0 - std::abs(q), 2.0 + std::abs(q));
}

double scale_deviation(double p) {
    if (!(p > 0.0) || !std::isfinite(p)) throw InvalidInput("scale_deviation: p must be positive");
    if (p == 1.0) return 0.0;
    auto h = [p](double x) { return standard_semicircle_cdf(p * x) - standard_semicircle_cdf(x); };
    const double reach = 2.0 / std::min(p, 1.0);
    return grid_supremum(h, -reach, reach);
}

}  // namespace freeclt
