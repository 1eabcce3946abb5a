#include "freeclt/measure.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "freeclt/error.hpp"

namespace freeclt {

namespace {

constexpr double kMassTolerance = 1e-6;
constexpr double kMergeTolerance = 1e-12;

bool finite(double x) { return std::isfinite(x); }

// 8-point Gauss-Legendre rule on [-1, 1].
constexpr std::array<double, 8> kGlNodes = {
    -0.9602898564975363, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
    0.1834346424956498,  0.5255324099163290,  0.7966664774136267,  0.9602898564975363};
constexpr std::array<double, 8> kGlWeights = {
    0.1012285362903763, 0.2223810344533745, 0.3137066458778873, 0.3626837833783620,
    0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};

double binomial(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

// Integral over [a, b] (0 <= a < b) of f(t) t^p where f is linear with
// f(a) = fa, f(b) = fb.
double nonneg_power_integral(double a, double b, double fa, double fb, double p) {
    if (!(b > a)) return 0.0;
    const double h = 0.5 * (b - a);
    const double c = 0.5 * (a + b);
    const double fc = 0.5 * (fa + fb);
    const double s = (fb - fa) / (b - a);
    const bool integer = p == std::floor(p) && p <= 64.0;
    if (integer) {
        // Expand (c + u)^k around the cell center; every term is bounded by
        // the integrand's magnitude, so there is no cancellation to speak of.
        const int k = static_cast<int>(p);
        double sum = 0.0;
        double hp = h;  // h^(j+1)
        for (int j = 0; j <= k; ++j) {
            double local = 0.0;
            if (j % 2 == 0)
                local = fc * 2.0 * hp / (j + 1);
            else
                local = s * 2.0 * hp * h / (j + 2);
            sum += binomial(k, j) * std::pow(c, k - j) * local;
            hp *= h;
        }
        return sum;
    }
    // f(t) = alpha + beta t; exact antiderivative of t^p and t^(p+1).
    const double beta = s;
    const double alpha = fa - s * a;
    const double p1 = p + 1.0;
    const double p2 = p + 2.0;
    return alpha * (std::pow(b, p1) - std::pow(a, p1)) / p1 +
           beta * (std::pow(b, p2) - std::pow(a, p2)) / p2;
}

enum class Integrand { SignedPower, AbsPower };

// Integral over [a, b] of f(t) * t^p (SignedPower, integer p) or |t|^p.
double linear_piece_integral(double a, double b, double fa, double fb, double p,
                             Integrand kind) {
    if (!(b > a)) return 0.0;
    auto lerp = [&](double x) { return fa + (fb - fa) * (x - a) / (b - a); };
    double total = 0.0;
    if (b > 0.0) {
        const double lo = std::max(a, 0.0);
        total += nonneg_power_integral(lo, b, lerp(lo), fb, p);
    }
    if (a < 0.0) {
        const double hi = std::min(b, 0.0);
        // Reflect t -> -t so the piece lies in [0, inf).
        double neg = nonneg_power_integral(-hi, -a, lerp(hi), fa, p);
        if (kind == Integrand::SignedPower && static_cast<long long>(p) % 2 != 0) neg = -neg;
        total += neg;
    }
    return total;
}

// Visits every density piece clipped to [lo, hi], passing (a, b, fa, fb).
template <typename Visitor>
void for_each_piece(const Measure& mu, double lo, double hi, Visitor&& visit) {
    const auto& g = mu.grid();
    const auto& f = mu.density();
    if (g.empty() || hi <= g.front() || lo >= g.back()) return;
    std::size_t i = 0;
    if (lo > g.front())
        i = static_cast<std::size_t>(std::upper_bound(g.begin(), g.end(), lo) - g.begin()) - 1;
    for (; i + 1 < g.size() && g[i] < hi; ++i) {
        const double a = g[i], b = g[i + 1];
        const double pa = std::max(a, lo), pb = std::min(b, hi);
        if (!(pb > pa)) continue;
        const double slope = (f[i + 1] - f[i]) / (b - a);
        visit(pa, pb, f[i] + slope * (pa - a), f[i] + slope * (pb - a));
    }
}

double density_power_integral(const Measure& mu, double lo, double hi, double p, Integrand kind) {
    double total = 0.0;
    for_each_piece(mu, lo, hi, [&](double a, double b, double fa, double fb) {
        total += linear_piece_integral(a, b, fa, fb, p, kind);
    });
    return total;
}

double atom_power(double x, double p, Integrand kind) {
    if (kind == Integrand::AbsPower) return p == 0.0 ? 1.0 : std::pow(std::abs(x), p);
    return std::pow(x, static_cast<int>(p));
}

// Value at x of the linear density of the grid cell containing `inside`
// (zero when `inside` lies outside the grid).
double cell_linear(const Measure& mu, double inside, double x) {
    const auto& g = mu.grid();
    const auto& f = mu.density();
    if (g.empty() || inside < g.front() || inside >= g.back()) return 0.0;
    const std::size_t i =
        static_cast<std::size_t>(std::upper_bound(g.begin(), g.end(), inside) - g.begin()) - 1;
    return f[i] + (f[i + 1] - f[i]) * (x - g[i]) / (g[i + 1] - g[i]);
}

}  // namespace

Measure Measure::from_parts(std::vector<Atom> atoms, std::vector<double> grid,
                            std::vector<double> density) {
    if (grid.size() != density.size())
        throw InvalidInput("measure: grid and density sizes differ");
    if (grid.size() == 1) throw InvalidInput("measure: a density grid needs at least two points");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!finite(grid[i]) || !finite(density[i]))
            throw InvalidInput("measure: non-finite grid or density value");
        if (density[i] < 0.0) throw InvalidInput("measure: negative density value");
        if (i > 0 && !(grid[i] > grid[i - 1]))
            throw InvalidInput("measure: grid must be strictly increasing");
    }
    for (const auto& a : atoms) {
        if (!finite(a.position) || !finite(a.mass)) throw InvalidInput("measure: non-finite atom");
        if (a.mass < 0.0) throw InvalidInput("measure: negative atom mass");
    }
    std::erase_if(atoms, [](const Atom& a) { return a.mass == 0.0; });
    if (std::all_of(density.begin(), density.end(), [](double v) { return v == 0.0; })) {
        grid.clear();
        density.clear();
    }
    if (atoms.empty() && grid.empty()) throw InvalidInput("measure: no mass");

    std::sort(atoms.begin(), atoms.end(),
              [](const Atom& l, const Atom& r) { return l.position < r.position; });
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    if (!atoms.empty()) {
        lo = atoms.front().position;
        hi = atoms.back().position;
    }
    if (!grid.empty()) {
        lo = std::min(lo, grid.front());
        hi = std::max(hi, grid.back());
    }
    const double width = hi - lo;
    const double merge_tol =
        width > 0.0 ? kMergeTolerance * width : kMergeTolerance * std::max(1.0, std::abs(lo));
    std::vector<Atom> merged;
    for (const auto& a : atoms) {
        if (!merged.empty() && a.position - merged.back().position <= merge_tol) {
            auto& m = merged.back();
            const double mass = m.mass + a.mass;
            if (a.position != m.position) m.position = (m.position * m.mass + a.position * a.mass) / mass;
            m.mass = mass;
        } else {
            merged.push_back(a);
        }
    }

    double total = 0.0;
    for (const auto& a : merged) total += a.mass;
    for (std::size_t i = 0; i + 1 < grid.size(); ++i)
        total += 0.5 * (density[i] + density[i + 1]) * (grid[i + 1] - grid[i]);
    if (std::abs(total - 1.0) > kMassTolerance) {
        std::ostringstream os;
        os << "measure: total mass " << total << " deviates from 1 by more than "
           << kMassTolerance;
        throw InvalidInput(os.str());
    }
    for (auto& a : merged) a.mass /= total;
    for (auto& v : density) v /= total;

    Measure mu;
    mu.atoms_ = std::move(merged);
    mu.grid_ = std::move(grid);
    mu.density_ = std::move(density);
    mu.build_tables();
    return mu;
}

void Measure::build_tables() {
    atom_cdf_.resize(atoms_.size());
    double run = 0.0;
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
        run += atoms_[i].mass;
        atom_cdf_[i] = run;
    }
    cell_cdf_.assign(grid_.size(), 0.0);
    run = 0.0;
    for (std::size_t i = 0; i + 1 < grid_.size(); ++i) {
        cell_cdf_[i] = run;
        run += 0.5 * (density_[i] + density_[i + 1]) * (grid_[i + 1] - grid_[i]);
    }
    if (!grid_.empty()) cell_cdf_.back() = run;
}

Measure Measure::dirac(double position) { return from_parts({{position, 1.0}}, {}, {}); }

Measure Measure::discrete(std::vector<Atom> atoms) { return from_parts(std::move(atoms), {}, {}); }

Measure Measure::uniform(double a, double b) {
    if (!(b > a)) throw InvalidInput("uniform: need a < b");
    const double h = 1.0 / (b - a);
    return from_parts({}, {a, b}, {h, h});
}

Measure Measure::rademacher() { return discrete({{-1.0, 0.5}, {1.0, 0.5}}); }

Measure Measure::empirical(std::span<const double> samples) {
    if (samples.empty()) throw InvalidInput("empirical: no samples");
    std::vector<Atom> atoms;
    atoms.reserve(samples.size());
    const double m = 1.0 / static_cast<double>(samples.size());
    for (double x : samples) atoms.push_back({x, m});
    return discrete(std::move(atoms));
}

double Measure::atom_mass() const { return atom_cdf_.empty() ? 0.0 : atom_cdf_.back(); }

double Measure::continuous_mass() const { return cell_cdf_.empty() ? 0.0 : cell_cdf_.back(); }

double Measure::support_min() const {
    double lo = std::numeric_limits<double>::infinity();
    if (!atoms_.empty()) lo = atoms_.front().position;
    if (!grid_.empty()) lo = std::min(lo, grid_.front());
    return lo;
}

double Measure::support_max() const {
    double hi = -std::numeric_limits<double>::infinity();
    if (!atoms_.empty()) hi = atoms_.back().position;
    if (!grid_.empty()) hi = std::max(hi, grid_.back());
    return hi;
}

namespace {

double continuous_cdf(const std::vector<double>& g, const std::vector<double>& f,
                      const std::vector<double>& cum, double x) {
    if (g.empty() || x <= g.front()) return 0.0;
    if (x >= g.back()) return cum.back();
    const std::size_t i =
        static_cast<std::size_t>(std::upper_bound(g.begin(), g.end(), x) - g.begin()) - 1;
    const double d = x - g[i];
    const double s = (f[i + 1] - f[i]) / (g[i + 1] - g[i]);
    return cum[i] + d * (f[i] + 0.5 * s * d);
}

}  // namespace

double Measure::cdf(double x) const {
    const auto it = std::upper_bound(atoms_.begin(), atoms_.end(), x,
                                     [](double v, const Atom& a) { return v < a.position; });
    const double atom_part = it == atoms_.begin() ? 0.0 : atom_cdf_[(it - atoms_.begin()) - 1];
    return std::min(1.0, atom_part + continuous_cdf(grid_, density_, cell_cdf_, x));
}

double Measure::cdf_left(double x) const {
    const auto it = std::lower_bound(atoms_.begin(), atoms_.end(), x,
                                     [](const Atom& a, double v) { return a.position < v; });
    const double atom_part = it == atoms_.begin() ? 0.0 : atom_cdf_[(it - atoms_.begin()) - 1];
    return std::min(1.0, atom_part + continuous_cdf(grid_, density_, cell_cdf_, x));
}

double Measure::density_at(double x) const {
    if (grid_.empty() || x < grid_.front() || x > grid_.back()) return 0.0;
    if (x == grid_.back()) return density_.back();
    const std::size_t i =
        static_cast<std::size_t>(std::upper_bound(grid_.begin(), grid_.end(), x) - grid_.begin()) -
        1;
    return density_[i] + (density_[i + 1] - density_[i]) * (x - grid_[i]) / (grid_[i + 1] - grid_[i]);
}

std::vector<double> Measure::breakpoints() const {
    std::vector<double> pts(grid_);
    pts.reserve(grid_.size() + atoms_.size());
    for (const auto& a : atoms_) pts.push_back(a.position);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

double Measure::quantile(double u) const {
    if (!(u > 0.0) || u > 1.0 + 1e-12) throw InvalidInput("quantile: level must lie in (0, 1]");
    const auto pts = breakpoints();
    const auto it = std::lower_bound(pts.begin(), pts.end(), u,
                                     [this](double x, double level) { return cdf(x) < level; });
    if (it == pts.end()) return pts.back();
    const std::size_t i = static_cast<std::size_t>(it - pts.begin());
    if (i == 0 || cdf_left(pts[i]) < u) return pts[i];
    // The level is crossed by the continuous part inside (pts[i-1], pts[i]).
    const double p = pts[i - 1];
    const double q = pts[i];
    const double mid = 0.5 * (p + q);
    const double fp = cell_linear(*this, mid, p);
    const double fq = cell_linear(*this, mid, q);
    const double slope = (fq - fp) / (q - p);
    const double r = u - cdf(p);
    const double disc = std::max(0.0, fp * fp + 2.0 * slope * r);
    const double denom = fp + std::sqrt(disc);
    const double d = denom > 0.0 ? 2.0 * r / denom : 0.0;
    return std::clamp(p + d, p, q);
}

TruncationWindow TruncationWindow::symmetric(double half_width) {
    if (!(half_width > 0.0)) throw InvalidInput("truncation window: half width must be positive");
    return {-half_width, half_width};
}

GrowthFunction GrowthFunction::abs_power(double delta) {
    std::ostringstream os;
    os << "|x|^" << delta;
    return {[delta](double x) { return std::pow(std::abs(x), delta); }, os.str(), delta};
}

GrowthFunction GrowthFunction::log1p_abs() {
    return {[](double x) { return std::log1p(std::abs(x)); }, "log(1+|x|)", std::nullopt};
}

std::pair<double, double> linear_density_between(const Measure& mu, double p, double q) {
    const double mid = 0.5 * (p + q);
    return {cell_linear(mu, mid, p), cell_linear(mu, mid, q)};
}

double kolmogorov_distance(const Measure& mu, const Measure& nu) {
    auto pts = mu.breakpoints();
    const auto other = nu.breakpoints();
    pts.insert(pts.end(), other.begin(), other.end());
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

    double sup = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double x = pts[i];
        sup = std::max(sup, std::abs(mu.cdf(x) - nu.cdf(x)));
        sup = std::max(sup, std::abs(mu.cdf_left(x) - nu.cdf_left(x)));
        if (i + 1 == pts.size()) break;
        // Between breakpoints both CDFs are quadratic; the difference has a
        // stationary point where the two linear densities cross.
        const double p = x, q = pts[i + 1];
        const double mid = 0.5 * (p + q);
        const double gp = cell_linear(mu, mid, p) - cell_linear(nu, mid, p);
        const double gq = cell_linear(mu, mid, q) - cell_linear(nu, mid, q);
        if ((gp > 0.0 && gq < 0.0) || (gp < 0.0 && gq > 0.0)) {
            const double y = p + (q - p) * gp / (gp - gq);
            sup = std::max(sup, std::abs(mu.cdf(y) - nu.cdf(y)));
        }
    }
    return std::min(1.0, sup);
}

double kolmogorov_distance(const Measure& mu, const std::function<double(double)>& reference,
                           std::span<const double> extra_points, int subdivisions) {
    auto pts = mu.breakpoints();
    pts.insert(pts.end(), extra_points.begin(), extra_points.end());
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    double sup = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double x = pts[i];
        const double r = reference(x);
        sup = std::max({sup, std::abs(mu.cdf(x) - r), std::abs(mu.cdf_left(x) - r)});
        if (i + 1 == pts.size()) break;
        const double step = (pts[i + 1] - x) / (subdivisions + 1);
        for (int k = 1; k <= subdivisions; ++k) {
            const double y = x + k * step;
            sup = std::max(sup, std::abs(mu.cdf(y) - reference(y)));
        }
    }
    return std::min(1.0, sup);
}

double moment(const Measure& mu, int k) {
    if (k < 1) throw InvalidInput("moment: order must be positive");
    double total = 0.0;
    for (const auto& a : mu.atoms()) total += a.mass * std::pow(a.position, k);
    const double inf = std::numeric_limits<double>::infinity();
    return total + density_power_integral(mu, -inf, inf, k, Integrand::SignedPower);
}

double abs_moment(const Measure& mu, double power) {
    if (!(power >= 0.0) || !finite(power)) throw InvalidInput("abs_moment: power must be >= 0");
    double total = 0.0;
    for (const auto& a : mu.atoms()) total += a.mass * atom_power(a.position, power, Integrand::AbsPower);
    const double inf = std::numeric_limits<double>::infinity();
    return total + density_power_integral(mu, -inf, inf, power, Integrand::AbsPower);
}

double g_moment(const Measure& mu, const GrowthFunction& g) {
    if (g.power) return abs_moment(mu, 2.0 + *g.power);
    auto checked = [&](double x) {
        const double v = g(x);
        if (!finite(v) || v < 0.0) {
            std::ostringstream os;
            os << "g_moment: growth function " << g.label << " is negative or non-finite at " << x;
            throw InvalidInput(os.str());
        }
        return v;
    };
    double total = 0.0;
    for (const auto& a : mu.atoms()) total += a.mass * a.position * a.position * checked(a.position);
    const double inf = std::numeric_limits<double>::infinity();
    auto integrate = [&](double a, double b, double fa, double fb) {
        const double h = 0.5 * (b - a), c = 0.5 * (a + b);
        for (std::size_t k = 0; k < kGlNodes.size(); ++k) {
            const double t = c + h * kGlNodes[k];
            const double f = fa + (fb - fa) * (t - a) / (b - a);
            total += h * kGlWeights[k] * f * t * t * checked(t);
        }
    };
    for_each_piece(mu, -inf, inf, [&](double a, double b, double fa, double fb) {
        // Split at zero so that kinks of g at the origin fall on a boundary.
        if (a < 0.0 && b > 0.0) {
            const double f0 = fa + (fb - fa) * (-a) / (b - a);
            integrate(a, 0.0, fa, f0);
            integrate(0.0, b, f0, fb);
        } else {
            integrate(a, b, fa, fb);
        }
    });
    return total;
}

double tail_second_moment(const Measure& mu, double c) {
    if (!(c > 0.0)) throw InvalidInput("tail_second_moment: threshold must be positive");
    double total = 0.0;
    for (const auto& a : mu.atoms())
        if (std::abs(a.position) > c) total += a.mass * a.position * a.position;
    const double inf = std::numeric_limits<double>::infinity();
    total += density_power_integral(mu, -inf, -c, 2.0, Integrand::AbsPower);
    total += density_power_integral(mu, c, inf, 2.0, Integrand::AbsPower);
    return total;
}

double windowed_abs_third(const Measure& mu, double c) {
    if (!(c > 0.0)) throw InvalidInput("windowed_abs_third: threshold must be positive");
    double total = 0.0;
    for (const auto& a : mu.atoms())
        if (std::abs(a.position) <= c) total += a.mass * std::pow(std::abs(a.position), 3);
    return total + density_power_integral(mu, -c, c, 3.0, Integrand::AbsPower);
}

double windowed_second_moment(const Measure& mu, double c) {
    if (!(c > 0.0)) throw InvalidInput("windowed_second_moment: threshold must be positive");
    double total = 0.0;
    for (const auto& a : mu.atoms())
        if (std::abs(a.position) <= c) total += a.mass * a.position * a.position;
    return total + density_power_integral(mu, -c, c, 2.0, Integrand::AbsPower);
}

double outside_mass(const Measure& mu, const TruncationWindow& w) {
    return std::max(0.0, mu.cdf_left(w.t) + (1.0 - mu.cdf(w.tau)));
}

Measure affine_pushforward(const Measure& mu, double scale, double shift) {
    if (scale == 0.0 || !finite(scale) || !finite(shift))
        throw InvalidInput("affine_pushforward: scale must be finite and nonzero");
    std::vector<Atom> atoms;
    atoms.reserve(mu.atoms().size());
    for (const auto& a : mu.atoms()) atoms.push_back({(a.position - shift) / scale, a.mass});
    std::vector<double> grid(mu.grid().size());
    std::vector<double> density(mu.density().size());
    const double jac = std::abs(scale);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        grid[i] = (mu.grid()[i] - shift) / scale;
        density[i] = mu.density()[i] * jac;
    }
    if (scale < 0.0) {
        std::reverse(grid.begin(), grid.end());
        std::reverse(density.begin(), density.end());
    }
    return Measure::from_parts(std::move(atoms), std::move(grid), std::move(density));
}

Measure truncate(const Measure& mu, const TruncationWindow& w) {
    if (!(w.t < 0.0 && 0.0 < w.tau)) throw InvalidInput("truncate: window must satisfy t < 0 < tau");
    std::vector<Atom> atoms;
    for (const auto& a : mu.atoms())
        if (w.contains(a.position)) atoms.push_back(a);
    const double outside = outside_mass(mu, w);
    if (outside > 0.0) atoms.push_back({0.0, outside});

    std::vector<double> grid;
    std::vector<double> density;
    const auto& g = mu.grid();
    if (!g.empty() && g.back() > w.t && g.front() < w.tau) {
        const double lo = std::max(g.front(), w.t);
        const double hi = std::min(g.back(), w.tau);
        grid.push_back(lo);
        density.push_back(mu.density_at(lo));
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (g[i] > lo && g[i] < hi) {
                grid.push_back(g[i]);
                density.push_back(mu.density()[i]);
            }
        }
        grid.push_back(hi);
        // Evaluate the right end from inside its cell so a jump at the end
        // of the original grid is kept.
        density.push_back(hi == g.back() ? mu.density().back()
                                         : cell_linear(mu, 0.5 * (grid[grid.size() - 2] + hi), hi));
        if (lo == g.front()) density.front() = mu.density().front();
    }
    return Measure::from_parts(std::move(atoms), std::move(grid), std::move(density));
}

CenteredStats centered_stats(const Measure& nu) {
    const double alpha = moment(nu, 1);
    return {alpha, std::max(0.0, moment(nu, 2) - alpha * alpha)};
}

double mean(const Measure& mu) { return moment(mu, 1); }

double variance(const Measure& mu) {
    const double m = moment(mu, 1);
    return std::max(0.0, moment(mu, 2) - m * m);
}

nlohmann::ordered_json to_json(const Measure& mu) {
    nlohmann::ordered_json j;
    auto atoms = nlohmann::ordered_json::array();
    for (const auto& a : mu.atoms()) atoms.push_back({a.position, a.mass});
    j["atoms"] = std::move(atoms);
    j["grid"] = mu.grid();
    j["density"] = mu.density();
    return j;
}

Measure measure_from_json(const nlohmann::json& j) {
    try {
        std::vector<Atom> atoms;
        if (j.contains("atoms")) {
            for (const auto& a : j.at("atoms")) {
                if (!a.is_array() || a.size() != 2)
                    throw InvalidInput("measure json: each atom must be [position, mass]");
                atoms.push_back({a[0].get<double>(), a[1].get<double>()});
            }
        }
        std::vector<double> grid = j.value("grid", std::vector<double>{});
        std::vector<double> density = j.value("density", std::vector<double>{});
        return Measure::from_parts(std::move(atoms), std::move(grid), std::move(density));
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("measure json: ") + e.what());
    }
}

}  // namespace freeclt
