#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "freeclt/measure.hpp"

namespace freeclt::testing {

/// Random compact measure on roughly [-2, 2]: up to three atoms plus, most of
/// the time, a positive piecewise-linear density on a random grid.
inline Measure random_measure(std::mt19937_64& rng, bool allow_pure_atoms = true) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> atom_count(0, 3);
    const bool with_density = !allow_pure_atoms || unit(rng) < 0.8;
    int atoms = atom_count(rng);
    if (!with_density && atoms == 0) atoms = 2;
    std::vector<Atom> at;
    for (int i = 0; i < atoms; ++i) at.push_back({-2.0 + 4.0 * unit(rng), 0.05 + unit(rng)});
    std::vector<double> grid, dens;
    if (with_density) {
        const int m = 5 + static_cast<int>(unit(rng) * 30);
        const double a = -2.0 + 1.5 * unit(rng);
        const double b = 0.5 + 1.5 * unit(rng);
        for (int i = 0; i < m; ++i) {
            grid.push_back(a + (b - a) * i / (m - 1));
            dens.push_back(0.1 + unit(rng));
        }
    }
    double atom_total = 0.0;
    for (const auto& x : at) atom_total += x.mass;
    double cont = 0.0;
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) cont += 0.5 * (dens[i] + dens[i + 1]) * (grid[i + 1] - grid[i]);
    const double share = with_density ? (atoms ? 0.3 + 0.5 * unit(rng) : 1.0) : 0.0;
    for (auto& x : at) x.mass *= (1.0 - share) / atom_total;
    for (auto& v : dens) v *= share / cont;
    return Measure::from_parts(std::move(at), std::move(grid), std::move(dens));
}

/// Same measure shifted to mean zero.
inline Measure centered(const Measure& mu) { return affine_pushforward(mu, 1.0, mean(mu)); }

/// Composite Simpson rule with n (even) intervals.
template <typename F>
double simpson(F&& f, double a, double b, int n) {
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

/// CDF of the arcsine law on [-r, r], density 1 / (pi sqrt(r^2 - x^2)).
inline double arcsine_cdf(double x, double r = 2.0) {
    if (x <= -r) return 0.0;
    if (x >= r) return 1.0;
    return 0.5 + std::asin(x / r) / 3.141592653589793238;
}

}  // namespace freeclt::testing
