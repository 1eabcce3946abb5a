#include "freeclt/freeconv.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "freeclt/error.hpp"
#include "freeclt/parallel.hpp"

namespace freeclt {

namespace {

constexpr int kOrder = 32;
constexpr std::size_t kLeafCells = 8;
constexpr double kFarRatio = 1.0 / 3.0;
constexpr double kLogEpsilon = -36.84;  // ln(1e-16)
constexpr double kSeriesRadius = 0.2;
constexpr double kPi = std::numbers::pi;

const std::array<std::array<double, kOrder>, kOrder>& binomials() {
    static const auto table = [] {
        std::array<std::array<double, kOrder>, kOrder> t{};
        for (int n = 0; n < kOrder; ++n) {
            t[n][0] = 1.0;
            for (int k = 1; k <= n; ++k) t[n][k] = t[n - 1][k - 1] + (k < n ? t[n - 1][k] : 0.0);
        }
        return t;
    }();
    return table;
}

// target[k] += sum_j C(k, j) d^(k-j) source[j], i.e. moments about a center
// moved by d = (source center) - (target center).
void shift_moments(const double* source, double d, double* target) {
    const auto& binom = binomials();
    std::array<double, kOrder> dpow{};
    dpow[0] = 1.0;
    for (int k = 1; k < kOrder; ++k) dpow[k] = dpow[k - 1] * d;
    for (int k = 0; k < kOrder; ++k) {
        double sum = 0.0;
        for (int j = 0; j <= k; ++j) sum += binom[k][j] * dpow[k - j] * source[j];
        target[k] += sum;
    }
}

}  // namespace

HalfPlanePoint::HalfPlanePoint(double re, double im) : re_(re), im_(im) {
    if (!std::isfinite(re) || !std::isfinite(im) || !(im > 0.0))
        throw InvalidInput("half-plane point: imaginary part must be positive and finite");
}

void ConvolutionParams::validate() const {
    if (!(eta > 0.0) || !(fp_tol > 0.0) || fp_max_iter <= 0 || !(mass_defect_limit > 0.0) ||
        !(refine_tol > 0.0))
        throw InvalidInput("convolution params: all tolerances must be strictly positive");
    if (grid_points < 256) throw InvalidInput("convolution params: grid_points must be >= 256");
}

void ConvolutionDiagnostics::absorb(const ConvolutionDiagnostics& other) {
    mass_defect = std::max(mass_defect, other.mass_defect);
    output_points = std::max(output_points, other.output_points);
    max_iterations = std::max(max_iterations, other.max_iterations);
    evaluations += other.evaluations;
}

CauchyTransform::CauchyTransform(const Measure& mu) : atoms_(mu.atoms()) {
    const auto& g = mu.grid();
    const auto& f = mu.density();
    for (std::size_t i = 0; i + 1 < g.size(); ++i) {
        const double a = g[i], b = g[i + 1];
        cells_.push_back({a, b, 0.5 * (a + b), 0.5 * (b - a), 0.5 * (f[i] + f[i + 1]),
                          (f[i + 1] - f[i]) / (b - a)});
    }
    if (!cells_.empty()) root_ = build(0, cells_.size());
}

int CauchyTransform::build(std::size_t lo, std::size_t hi) {
    const int index = static_cast<int>(nodes_.size());
    Node node;
    node.lo = lo;
    node.hi = hi;
    node.center = 0.5 * (cells_[lo].a + cells_[hi - 1].b);
    node.radius = 0.5 * (cells_[hi - 1].b - cells_[lo].a);
    nodes_.push_back(node);
    moments_.resize(nodes_.size() * kOrder, 0.0);

    if (hi - lo > kLeafCells) {
        const std::size_t mid = lo + (hi - lo) / 2;
        const int left = build(lo, mid);
        const int right = build(mid, hi);
        nodes_[index].left = left;
        nodes_[index].right = right;
        for (int child : {left, right}) {
            if (nodes_[child].empty) continue;
            shift_moments(&moments_[child * kOrder], nodes_[child].center - nodes_[index].center,
                          &moments_[index * kOrder]);
        }
        nodes_[index].empty = nodes_[left].empty && nodes_[right].empty;
    } else {
        bool empty = true;
        std::array<double, kOrder> local{};
        for (std::size_t i = lo; i < hi; ++i) {
            const Cell& c = cells_[i];
            if (c.f_center == 0.0 && c.slope == 0.0) continue;
            empty = false;
            // Moments of the cell about its own center.
            double hp = c.half;
            for (int j = 0; j < kOrder; ++j) {
                local[j] = (j % 2 == 0) ? c.f_center * 2.0 * hp / (j + 1)
                                        : c.slope * 2.0 * hp * c.half / (j + 2);
                hp *= c.half;
            }
            shift_moments(local.data(), c.center - node.center, &moments_[index * kOrder]);
        }
        nodes_[index].empty = empty;
    }
    return index;
}

void CauchyTransform::add_cell(const Cell& c, Complex z, Value& acc) const {
    if (c.f_center == 0.0 && c.slope == 0.0) return;
    const Complex d = z - c.center;
    const Complex w = c.half / d;
    const Complex za = z - c.a;
    const Complex zb = z - c.b;
    const Complex dlog = -2.0 * c.half / (za * zb);  // d/dz log((z-a)/(z-b))
    Complex log_ratio, excess, combined;
    if (std::abs(w) < kSeriesRadius) {
        // log((z-a)/(z-b)) = 2 atanh(w); expand to avoid cancellation in
        // (log_ratio - 2w) and (log_ratio + d * dlog).
        const Complex w2 = w * w;
        Complex term = w * w2;
        excess = 0.0;
        combined = 0.0;
        for (int k = 1; k < 24; ++k) {
            excess += 2.0 * term / static_cast<double>(2 * k + 1);
            combined -= 2.0 * term * (2.0 * k / static_cast<double>(2 * k + 1));
            term *= w2;
            if (std::abs(term) < 1e-18 * std::abs(w)) break;
        }
        log_ratio = 2.0 * w + excess;
    } else {
        log_ratio = std::log(za) - std::log(zb);
        excess = log_ratio - 2.0 * w;
        combined = log_ratio + d * dlog;
    }
    acc.g += c.f_center * log_ratio + c.slope * d * excess;
    acc.dg += c.f_center * dlog + c.slope * combined;
}

CauchyTransform::Value CauchyTransform::evaluate(Complex z) const {
    Value acc{{0.0, 0.0}, {0.0, 0.0}};
    for (const auto& a : atoms_) {
        const Complex inv = 1.0 / (z - a.position);
        acc.g += a.mass * inv;
        acc.dg -= a.mass * inv * inv;
    }
    if (root_ < 0) return acc;
    std::array<int, 256> stack{};
    int top = 0;
    stack[top++] = root_;
    while (top > 0) {
        const Node& node = nodes_[stack[--top]];
        if (node.empty) continue;
        const Complex dz = z - node.center;
        const double dist = std::abs(dz);
        if (node.radius <= kFarRatio * dist) {
            const double rho = node.radius / dist;
            const int terms =
                rho <= 0.0 ? 1 : std::min(kOrder, 1 + static_cast<int>(std::ceil(kLogEpsilon / std::log(rho))));
            const double* m = &moments_[static_cast<std::size_t>(&node - nodes_.data()) * kOrder];
            const Complex u = 1.0 / dz;
            Complex s = 0.0, t = 0.0;
            for (int k = terms - 1; k >= 0; --k) {
                s = s * u + m[k];
                t = t * u + static_cast<double>(k + 1) * m[k];
            }
            acc.g += u * s;
            acc.dg -= u * u * t;
        } else if (node.left < 0) {
            for (std::size_t i = node.lo; i < node.hi; ++i) add_cell(cells_[i], z, acc);
        } else {
            stack[top++] = node.left;
            stack[top++] = node.right;
        }
    }
    return acc;
}

Complex cauchy_transform(const Measure& mu, HalfPlanePoint z) {
    return CauchyTransform(mu)(z.value());
}

SubordinationSolver::SubordinationSolver(const Measure& mu, const Measure& nu, ConvolutionParams params)
    : mu_(mu), nu_(nu), params_(params),
      scale_(std::max(1e-300, mu.support_max() - mu.support_min() + nu.support_max() - nu.support_min())) {
    params_.validate();
}

SubordinationSolver::Result SubordinationSolver::solve(Complex z, std::optional<Complex> start) const {
    if (!(z.imag() > 0.0)) throw InvalidInput("subordinator: z must lie in the upper half plane");
    if (start && start->imag() > 0.0 && std::isfinite(std::abs(*start))) return iterate(z, *start);
    // Near the real axis the Picard map is almost neutral; walk down from
    // a height where it contracts.
    constexpr double kStepDown = 4.0;
    Complex w = z;
    int total = 0;
    for (double h = std::max(scale_, std::abs(z)); h > kStepDown * z.imag(); h /= kStepDown) {
        const auto r = iterate({z.real(), h}, w);
        w = r.omega;
        total += r.iterations;
    }
    auto r = iterate(z, w);
    r.iterations += total;
    return r;
}

SubordinationSolver::Result SubordinationSolver::iterate(Complex z, Complex w) const {
    constexpr double kNewtonStart = 0.1;
    constexpr double kMinNewtonStep = 1.0 / 64.0;
    constexpr double kRoundoff = 16.0 * std::numeric_limits<double>::epsilon();
    double prev_res = std::numeric_limits<double>::infinity();
    double res = prev_res;
    bool from_newton = false;
    Complex origin;
    double origin_res = 0.0;
    double newton_step = 1.0;
    int cooldown = 0;
    for (int it = 1; it <= params_.fp_max_iter; ++it) {
        const auto vm = mu_.evaluate(w);
        const Complex fm = 1.0 / vm.g;
        Complex u = z + fm - w;
        if (!(u.imag() > 0.0)) u.imag(z.imag());
        const auto vn = nu_.evaluate(u);
        const Complex fn = 1.0 / vn.g;
        const Complex wn = z + fn - u;
        res = std::abs(wn - w);
        if (!std::isfinite(res)) break;
        const Complex dhm = -vm.dg * fm * fm - 1.0;
        const Complex dhn = -vn.dg * fn * fn - 1.0;
        // Rounding in u is amplified by |H_nu'(u)|; no residual below that
        // floor is attainable.
        const double floor = kRoundoff * (std::abs(dhn) * (std::abs(fm) + std::abs(w) + std::abs(z)) +
                                          std::abs(fn) + std::abs(u) + std::abs(z));
        if (res <= std::max(params_.fp_tol * (1.0 + std::abs(w)), floor)) return {wn, vm.g, res, it};

        if (from_newton) {
            from_newton = false;
            if (res > origin_res) {
                // Backtrack: retry from the same origin with a shorter step,
                // or give Picard a few iterations once steps get too short.
                w = origin;
                newton_step *= 0.5;
                if (newton_step < kMinNewtonStep) {
                    newton_step = 1.0;
                    cooldown = 4;
                }
                prev_res = std::numeric_limits<double>::infinity();
                continue;
            }
            newton_step = std::min(1.0, 2.0 * newton_step);
        }
        if (cooldown == 0 && res < kNewtonStart * (1.0 + std::abs(w))) {
            const Complex dphi = dhn * dhm - 1.0;
            if (std::abs(dphi) > 0.0) {
                const Complex candidate = w - newton_step * (wn - w) / dphi;
                if (std::isfinite(std::abs(candidate)) && candidate.imag() >= z.imag() * (1.0 - 1e-9)) {
                    origin = w;
                    origin_res = res;
                    prev_res = res;
                    w = candidate;
                    from_newton = true;
                    continue;
                }
            }
        }
        if (cooldown > 0) --cooldown;
        w = res > prev_res ? w + 0.5 * (wn - w) : wn;
        prev_res = res;
    }
    std::ostringstream os;
    os.precision(17);
    os << "subordination did not converge at z = " << z.real() << " + " << z.imag()
       << "i; last residual " << res;
    throw NumericalFailure(os.str());
}

Complex subordinator(const Measure& mu, const Measure& nu, HalfPlanePoint z,
                     const ConvolutionParams& params) {
    return SubordinationSolver(mu, nu, params).solve(z.value()).omega;
}

namespace {

struct Sample {
    double x = 0.0;
    double f = 0.0;
    Complex omega;
    bool excluded = false;
    int iterations = 0;
};

// Evaluates the density of the continuous part of mu [+] nu at height eta.
class DensityProbe {
public:
    DensityProbe(const SubordinationSolver& solver, double eta, const std::vector<Atom>& atoms,
                 double exclusion)
        : solver_(solver), eta_(eta), atoms_(atoms), exclusion_(exclusion) {}

    Sample at(double x, std::optional<Complex> start) const {
        for (const auto& a : atoms_)
            if (std::abs(x - a.position) < exclusion_) return {x, 0.0, {}, true, 0};
        const Complex z(x, eta_);
        SubordinationSolver::Result r;
        try {
            r = solver_.solve(z, start);
        } catch (const NumericalFailure&) {
            // A neighbour's solution can sit in the wrong basin near cusps
            // of the output density; retry by continuation from above.
            if (!start) throw;
            r = solver_.solve(z);
        }
        Complex g = r.g;
        for (const auto& a : atoms_) g -= a.mass / (z - a.position);
        return {x, -g.imag() / kPi, r.omega, false, r.iterations};
    }

    double eta() const { return eta_; }

private:
    const SubordinationSolver& solver_;
    double eta_;
    const std::vector<Atom>& atoms_;
    double exclusion_;
};

constexpr std::size_t kChunk = 32;

std::vector<Sample> sample_uniform(const DensityProbe& probe, double lo, double hi, std::size_t points,
                                   unsigned threads) {
    std::vector<Sample> out(points);
    const double step = (hi - lo) / static_cast<double>(points - 1);
    const std::size_t chunks = (points + kChunk - 1) / kChunk;
    parallel_for(chunks, threads, [&](std::size_t c) {
        std::optional<Complex> start;
        for (std::size_t i = c * kChunk; i < std::min(points, (c + 1) * kChunk); ++i) {
            const double x = i + 1 == points ? hi : lo + step * static_cast<double>(i);
            out[i] = probe.at(x, start);
            if (!out[i].excluded) start = out[i].omega;
        }
    });
    return out;
}

// Excluded samples take values interpolated from their nearest evaluated
// neighbours.
void fill_excluded(std::vector<Sample>& s) {
    const std::size_t n = s.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (!s[i].excluded) continue;
        std::size_t j = i;
        while (j < n && s[j].excluded) ++j;
        const bool has_left = i > 0, has_right = j < n;
        for (std::size_t k = i; k < j; ++k) {
            if (has_left && has_right) {
                const double t = (s[k].x - s[i - 1].x) / (s[j].x - s[i - 1].x);
                s[k].f = s[i - 1].f + t * (s[j].f - s[i - 1].f);
            } else {
                s[k].f = has_left ? s[i - 1].f : (has_right ? s[j].f : 0.0);
            }
        }
        i = j;
    }
}

double trapezoid(const std::vector<Sample>& s, std::size_t from, std::size_t to) {
    double m = 0.0;
    for (std::size_t i = from; i + 1 <= to && i + 1 < s.size(); ++i)
        m += 0.5 * (std::max(0.0, s[i].f) + std::max(0.0, s[i + 1].f)) * (s[i + 1].x - s[i].x);
    return m;
}

}  // namespace

Measure free_convolve(const Measure& mu, const Measure& nu, const ConvolutionParams& params,
                      ConvolutionDiagnostics* diagnostics) {
    params.validate();
    if (mu.is_point_mass()) return affine_pushforward(nu, 1.0, -mu.atoms().front().position);
    if (nu.is_point_mass()) return affine_pushforward(mu, 1.0, -nu.atoms().front().position);

    std::vector<Atom> atoms;
    for (const auto& a : mu.atoms())
        for (const auto& b : nu.atoms())
            if (a.mass + b.mass > 1.0 + 1e-14) atoms.push_back({a.position + b.position, a.mass + b.mass - 1.0});
    double atom_total = 0.0;
    for (const auto& a : atoms) atom_total += a.mass;

    const SubordinationSolver solver(mu, nu, params);
    const double lo = mu.support_min() + nu.support_min();
    const double hi = mu.support_max() + nu.support_max();
    const double width = hi - lo;
    const double eta = params.eta * width;
    const DensityProbe probe(solver, eta, atoms, 64.0 * eta);

    // Coarse pass over the padded Minkowski sum locates the effective support.
    const std::size_t coarse_points = std::max<std::size_t>(257, params.grid_points / 4);
    auto coarse = sample_uniform(probe, lo - 4.0 * eta, hi + 4.0 * eta, coarse_points, params.threads);
    fill_excluded(coarse);
    double fmax = 0.0;
    for (const auto& s : coarse) fmax = std::max(fmax, s.f);
    std::size_t first = 0, last = coarse.size() - 1;
    if (fmax > 0.0) {
        constexpr double kTrimDensity = 1e-5;
        constexpr double kTrimMass = 1e-6;
        const double threshold = kTrimDensity * fmax;
        while (first + 1 < coarse.size() && coarse[first].f <= threshold &&
               trapezoid(coarse, 0, first + 1) <= kTrimMass)
            ++first;
        while (last > first && coarse[last].f <= threshold &&
               trapezoid(coarse, last - 1, coarse.size() - 1) <= kTrimMass)
            --last;
    }
    const std::size_t lo_index = first >= 2 ? first - 2 : 0;
    const std::size_t hi_index = std::min(coarse.size() - 1, last + 2);
    const double fine_lo = coarse[lo_index].x;
    const double fine_hi = coarse[hi_index].x;

    auto fine = sample_uniform(probe, fine_lo, fine_hi, static_cast<std::size_t>(params.grid_points),
                               params.threads);

    // Geometric seeds resolve features squeezed against output atoms.
    if (!atoms.empty()) {
        std::vector<double> seeds;
        for (const auto& a : atoms)
            for (double d = 1024.0 * eta; d < 1e-2 * width; d *= 2.0)
                for (double x : {a.position - d, a.position + d})
                    if (x > fine_lo && x < fine_hi) seeds.push_back(x);
        std::vector<Sample> extra(seeds.size());
        parallel_for(seeds.size(), params.threads, [&](std::size_t i) { extra[i] = probe.at(seeds[i], {}); });
        fine.insert(fine.end(), extra.begin(), extra.end());
        std::sort(fine.begin(), fine.end(), [](const Sample& l, const Sample& r) { return l.x < r.x; });
        fine.erase(std::unique(fine.begin(), fine.end(),
                               [](const Sample& l, const Sample& r) { return l.x == r.x; }),
                   fine.end());
    }

    // Adaptive refinement where linear interpolation misrepresents the mass.
    const double min_width = std::max(0.5 * eta, 1e-13 * width);
    constexpr int kMaxDepth = 48;
    constexpr std::size_t kMaxInserted = 1024;
    std::vector<std::vector<Sample>> inserted(fine.size() - 1);
    parallel_for(fine.size() - 1, params.threads, [&](std::size_t i) {
        if (fine[i].excluded || fine[i + 1].excluded) return;
        auto& out = inserted[i];
        auto refine = [&](auto&& self, const Sample& a, const Sample& b, int depth) -> void {
            if (depth >= kMaxDepth || b.x - a.x <= min_width || out.size() >= kMaxInserted) return;
            const Sample m = probe.at(0.5 * (a.x + b.x), a.omega);
            if (m.excluded) return;
            const double err = std::abs(m.f - 0.5 * (a.f + b.f)) * (b.x - a.x);
            if (err <= params.refine_tol) return;
            self(self, a, m, depth + 1);
            out.push_back(m);
            self(self, m, b, depth + 1);
        };
        refine(refine, fine[i], fine[i + 1], 0);
    });
    std::vector<Sample> samples;
    samples.reserve(fine.size() * 2);
    for (std::size_t i = 0; i < fine.size(); ++i) {
        samples.push_back(fine[i]);
        if (i < inserted.size()) samples.insert(samples.end(), inserted[i].begin(), inserted[i].end());
    }
    fill_excluded(samples);

    ConvolutionDiagnostics diag;
    diag.output_points = samples.size();
    diag.evaluations = coarse.size() + samples.size();
    double peak = 0.0;
    for (const auto& s : samples) {
        diag.max_iterations = std::max(diag.max_iterations, s.iterations);
        peak = std::max(peak, s.f);
    }
    for (const auto& s : coarse) diag.max_iterations = std::max(diag.max_iterations, s.iterations);

    const double negative_limit = -1e-6 * std::max(1.0, peak);
    std::vector<double> grid(samples.size());
    std::vector<double> density(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (samples[i].f < negative_limit) {
            std::ostringstream os;
            os << "free_convolve: recovered density " << samples[i].f << " at x = " << samples[i].x
               << " is negative beyond rounding";
            throw NumericalFailure(os.str());
        }
        grid[i] = samples[i].x;
        density[i] = std::max(0.0, samples[i].f);
    }
    double continuous = 0.0;
    for (std::size_t i = 0; i + 1 < grid.size(); ++i)
        continuous += 0.5 * (density[i] + density[i + 1]) * (grid[i + 1] - grid[i]);
    diag.mass_defect = std::abs(1.0 - continuous - atom_total);
    if (diag.mass_defect > params.mass_defect_limit || !(continuous > 0.0)) {
        std::ostringstream os;
        os << "free_convolve: mass defect " << diag.mass_defect << " exceeds limit "
           << params.mass_defect_limit << " (support [" << lo << ", " << hi << "], eta " << eta << ")";
        throw NumericalFailure(os.str());
    }
    const double target = std::max(0.0, 1.0 - atom_total);
    for (auto& v : density) v *= target / continuous;

    Measure out = Measure::from_parts(std::move(atoms), std::move(grid), std::move(density));

    // Free cumulants of order one and two add.
    const double m_expected = mean(mu) + mean(nu);
    const double v_expected = variance(mu) + variance(nu);
    const double m_got = mean(out);
    const double v_got = variance(out);
    const double sd = std::sqrt(v_expected);
    if (std::abs(m_got - m_expected) > 1e-4 * std::max(1.0, sd) ||
        std::abs(v_got - v_expected) > 1e-3 * std::max(1.0, v_expected)) {
        std::ostringstream os;
        os.precision(10);
        os << "free_convolve: moment self-check failed (mean " << m_got << " vs " << m_expected
           << ", variance " << v_got << " vs " << v_expected << ")";
        throw NumericalFailure(os.str());
    }
    if (diagnostics) diagnostics->absorb(diag);
    return out;
}

Measure free_convolve_n(std::span<const Measure> measures, const ConvolutionParams& params,
                        FoldOrder order, ConvolutionDiagnostics* diagnostics) {
    if (measures.empty()) throw InvalidInput("free_convolve_n: empty list");
    if (order == FoldOrder::Left) {
        Measure acc = measures.front();
        for (std::size_t j = 1; j < measures.size(); ++j)
            acc = free_convolve(acc, measures[j], params, diagnostics);
        return acc;
    }
    std::vector<Measure> level(measures.begin(), measures.end());
    while (level.size() > 1) {
        std::vector<Measure> next;
        next.reserve((level.size() + 1) / 2);
        for (std::size_t j = 0; j + 1 < level.size(); j += 2)
            next.push_back(free_convolve(level[j], level[j + 1], params, diagnostics));
        if (level.size() % 2 == 1) next.push_back(level.back());
        level = std::move(next);
    }
    return level.front();
}

Measure clt_sum(const TriangularRow& row, const ConvolutionParams& params,
                ConvolutionDiagnostics* diagnostics) {
    if (!(row.b_n_sq > 0.0)) throw InvalidInput("clt_sum: B_n must be positive");
    const double b_n = row.b_n();
    std::vector<Measure> scaled;
    scaled.reserve(row.size());
    for (const auto& m : row.measures) scaled.push_back(affine_pushforward(m, b_n, 0.0));
    return free_convolve_n(scaled, params, FoldOrder::Left, diagnostics);
}

}  // namespace freeclt
