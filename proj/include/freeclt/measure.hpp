#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace freeclt {

struct Atom {
    double position = 0.0;
    double mass = 0.0;
};

/// A compactly supported probability measure on the real line: finitely many
/// atoms plus a piecewise-linear density on a strictly increasing grid.
///
/// The density is the linear interpolation of `density()` between grid
/// points and zero outside [grid.front(), grid.back()]; it may jump at the
/// two ends of the grid. Instances are immutable once built and every
/// accessor is safe to call concurrently.
class Measure {
public:
    /// Validates and normalizes the parts.
    ///
    /// Atoms closer than 1e-12 times the support width are merged, zero-mass
    /// atoms are dropped, and a total mass within 1e-6 of one is rescaled to
    /// exactly one. Anything else (negative masses or densities, non-finite
    /// values, unsorted grid, mass far from one) throws InvalidInput.
    static Measure from_parts(std::vector<Atom> atoms, std::vector<double> grid,
                              std::vector<double> density);

    static Measure dirac(double position);
    static Measure discrete(std::vector<Atom> atoms);
    /// Uniform law on [a, b].
    static Measure uniform(double a, double b);
    /// (delta_{-1} + delta_{1}) / 2.
    static Measure rademacher();
    /// Empirical law of `samples`, each with mass 1/size.
    static Measure empirical(std::span<const double> samples);

    const std::vector<Atom>& atoms() const { return atoms_; }
    const std::vector<double>& grid() const { return grid_; }
    const std::vector<double>& density() const { return density_; }

    bool has_density() const { return !grid_.empty(); }
    bool is_point_mass() const { return grid_.empty() && atoms_.size() == 1; }
    double atom_mass() const;
    double continuous_mass() const;

    double support_min() const;
    double support_max() const;

    /// mu((-inf, x]).
    double cdf(double x) const;
    /// mu((-inf, x)).
    double cdf_left(double x) const;
    /// Value of the continuous part's density at x (right-continuous at the
    /// grid ends).
    double density_at(double x) const;
    /// Generalized inverse inf{x : cdf(x) >= u} for u in (0, 1].
    double quantile(double u) const;

    /// Sorted union of grid points and atom positions.
    std::vector<double> breakpoints() const;

private:
    Measure() = default;
    void build_tables();

    std::vector<Atom> atoms_;          // sorted by position
    std::vector<double> atom_cdf_;     // atom_cdf_[i] = mass of atoms_[0..i]
    std::vector<double> grid_;
    std::vector<double> density_;
    std::vector<double> cell_cdf_;     // continuous mass left of grid_[i]
};

/// [t, tau] with t < 0 < tau.
struct TruncationWindow {
    double t = -1.0;
    double tau = 1.0;

    static TruncationWindow symmetric(double half_width);
    bool contains(double x) const { return t <= x && x <= tau; }
};

/// Growth function used for the 2+g moment. `power`, when set, records that
/// the evaluator is |x|^power so integrals can use exact antiderivatives.
struct GrowthFunction {
    std::function<double(double)> evaluator;
    std::string label;
    std::optional<double> power;

    double operator()(double x) const { return evaluator(x); }

    static GrowthFunction abs_power(double delta);
    /// log(1 + |x|).
    static GrowthFunction log1p_abs();
};

/// Values at p and q of the linear density on the grid cell containing
/// (p + q) / 2; both are zero when that midpoint lies outside the grid.
std::pair<double, double> linear_density_between(const Measure& mu, double p, double q);

double kolmogorov_distance(const Measure& mu, const Measure& nu);

/// Supremum of |mu_cdf - reference| where `reference` is a continuous CDF.
/// The scan covers every breakpoint of mu (both one-sided limits), the extra
/// points, and `subdivisions` interior points per breakpoint interval.
double kolmogorov_distance(const Measure& mu, const std::function<double(double)>& reference,
                           std::span<const double> extra_points = {}, int subdivisions = 8);

double moment(const Measure& mu, int k);
/// Integral of |x|^power; power may be any nonnegative real.
double abs_moment(const Measure& mu, double power);
/// Integral of x^2 g(x).
double g_moment(const Measure& mu, const GrowthFunction& g);

/// Integral of x^2 over |x| > c (atoms at exactly +-c excluded).
double tail_second_moment(const Measure& mu, double c);
/// Integral of |x|^3 over |x| <= c (atoms at exactly +-c included).
double windowed_abs_third(const Measure& mu, double c);
/// Integral of x^2 over |x| <= c.
double windowed_second_moment(const Measure& mu, double c);
/// mu(R \ [t, tau]).
double outside_mass(const Measure& mu, const TruncationWindow& w);

/// Law of (X - shift) / scale for X ~ mu.
Measure affine_pushforward(const Measure& mu, double scale, double shift);

/// Restriction of mu to the window with the outside mass moved to an atom at 0.
Measure truncate(const Measure& mu, const TruncationWindow& w);

struct CenteredStats {
    double alpha = 0.0;
    double beta_sq = 0.0;
};
CenteredStats centered_stats(const Measure& nu);

double mean(const Measure& mu);
double variance(const Measure& mu);

nlohmann::ordered_json to_json(const Measure& mu);
Measure measure_from_json(const nlohmann::json& j);

}  // namespace freeclt
