#include "freeclt/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "freeclt/error.hpp"
#include "freeclt/semicircle.hpp"

namespace freeclt {

namespace {

constexpr double kPi = std::numbers::pi;

void require_eps(double eps, const char* who) {
    if (!(eps > 0.0 && eps <= 1.0)) {
        std::ostringstream os;
        os << who << ": eps must lie in (0, 1], got " << eps;
        throw InvalidInput(os.str());
    }
}

double power_rhs(const TriangularRow& row, double delta) {
    double sum = 0.0;
    for (const auto& m : row.measures) sum += abs_moment(m, 2.0 + delta);
    return std::sqrt(sum) / std::pow(row.b_n(), 1.0 + 0.5 * delta);
}

}  // namespace

double lambda_n(const TriangularRow& row, double eps) {
    require_eps(eps, "lambda_n");
    const double c = eps * row.b_n();
    double sum = 0.0;
    for (const auto& m : row.measures) sum += tail_second_moment(m, c);
    return std::clamp(sum / row.b_n_sq, 0.0, 1.0);
}

double ell_n(const TriangularRow& row, double eps) {
    require_eps(eps, "ell_n");
    const double b = row.b_n();
    double sum = 0.0;
    for (const auto& m : row.measures) sum += windowed_abs_third(m, eps * b);
    const double value = sum / (row.b_n_sq * b);
    if (value > eps * (1.0 + 1e-12)) {
        std::ostringstream os;
        os << "ell_n: value " << value << " exceeds eps = " << eps;
        throw NumericalFailure(os.str());
    }
    return value;
}

double TruncationSummary::n_n() const { return std::sqrt(n_n_sq); }

TruncationSummary summarize_truncation(std::span<const Measure> measures,
                                       std::span<const TruncationWindow> windows,
                                       const ConvolutionParams& params, bool with_convolution) {
    if (measures.empty()) throw InvalidInput("summarize_truncation: empty list of measures");
    if (windows.size() != measures.size())
        throw InvalidInput("summarize_truncation: need one window per measure");
    TruncationSummary s;
    s.windows.assign(windows.begin(), windows.end());
    double second_total = 0.0;
    for (std::size_t j = 0; j < measures.size(); ++j) {
        const auto& w = windows[j];
        if (!(w.t < 0.0 && w.tau > 0.0)) {
            std::ostringstream os;
            os << "summarize_truncation: window " << j << " must satisfy t < 0 < tau";
            throw InvalidInput(os.str());
        }
        s.truncated.push_back(truncate(measures[j], w));
        const auto st = centered_stats(s.truncated.back());
        s.alpha.push_back(st.alpha);
        s.beta_sq.push_back(st.beta_sq);
        s.m_n += st.alpha;
        s.n_n_sq += st.beta_sq;
        s.gamma_n += outside_mass(measures[j], w);
        s.abs_third_sum += abs_moment(s.truncated.back(), 3.0);
        second_total += moment(s.truncated.back(), 2);
    }
    if (!(s.n_n_sq > 1e-14 * second_total) || !(s.n_n_sq > 0.0))
        throw InvalidInput("summarize_truncation: every truncated measure is degenerate (N_n = 0)");
    if (with_convolution) {
        const double nn = s.n_n();
        std::vector<Measure> standardized;
        standardized.reserve(s.truncated.size());
        // Each nu_j is centered by its own alpha_j, so the free sum is the law
        // of (sum nu_j - M_n) / N_n.
        for (std::size_t j = 0; j < s.truncated.size(); ++j)
            standardized.push_back(affine_pushforward(s.truncated[j], nn, s.alpha[j]));
        s.normalized_sum = free_convolve_n(standardized, params);
        s.delta_n = kolmogorov_distance(*s.normalized_sum, SemicircleLaw::standard());
    }
    return s;
}

TruncationSummary summarize_truncation(const TriangularRow& row, const ConvolutionParams& params,
                                       bool with_convolution) {
    const std::vector<TruncationWindow> windows(row.size(), TruncationWindow::symmetric(row.b_n()));
    return summarize_truncation(row.measures, windows, params, with_convolution);
}

double delta_n_third_moment_bound(const TruncationSummary& summary, double scale) {
    if (!(summary.n_n_sq > 0.0)) throw InvalidInput("third-moment bound: N_n = 0");
    if (!(scale > 0.0)) throw InvalidInput("third-moment bound: scale must be positive");
    return 2.0 * std::sqrt(2.0) * scale * std::sqrt(summary.abs_third_sum) / std::pow(summary.n_n(), 1.5);
}

double rhs_thm2(const TruncationSummary& summary, double a, double b) {
    if (!(a > 0.0)) throw InvalidInput("rhs_thm2: a must be positive");
    if (!(summary.n_n_sq > 0.0)) throw InvalidInput("rhs_thm2: N_n = 0");
    const double nn = summary.n_n();
    return summary.delta_n + summary.gamma_n + std::abs(a * b - summary.m_n) / (kPi * nn) +
           (2.0 / kPi) * std::abs(a / nn - 1.0);
}

double thm2_lhs(std::span<const Measure> measures, double a, double b, const ConvolutionParams& params) {
    if (!(a > 0.0)) throw InvalidInput("thm2_lhs: a must be positive");
    const Measure sum = free_convolve_n(measures, params);
    return kolmogorov_distance(affine_pushforward(sum, a, a * b), SemicircleLaw::standard());
}

double rhs_cg(const TriangularRow& row) { return power_rhs(row, 1.0); }

double rhs_thm3(const TriangularRow& row, double eps) {
    return std::sqrt(lambda_n(row, eps) + ell_n(row, eps));
}

GClassCheck check_g_class(const GrowthFunction& g, std::span<const double> probes) {
    constexpr double kSlack = 1e-12;
    double prev_x = 0.0, prev_g = 0.0, prev_ratio = 0.0;
    for (std::size_t i = 0; i < probes.size(); ++i) {
        const double x = probes[i];
        if (!(x > 0.0) || (i > 0 && !(x > probes[i - 1])))
            throw InvalidInput("check_g_class: probes must be positive and strictly increasing");
        const double gx = g(x);
        const double gm = g(-x);
        if (!std::isfinite(gx) || !std::isfinite(gm)) {
            std::ostringstream os;
            os << "check_g_class: " << g.label << " is not finite at +-" << x;
            throw InvalidInput(os.str());
        }
        if (gx < 0.0 || gm < 0.0) return {false, "nonnegative", x, x};
        if (std::abs(gx - gm) > kSlack * std::max(1.0, std::abs(gx))) return {false, "even", x, -x};
        const double ratio = gx > 0.0 ? x / gx : std::numeric_limits<double>::infinity();
        if (i > 0) {
            if (gx < prev_g * (1.0 - kSlack)) return {false, "(a) nondecreasing", prev_x, x};
            if (ratio < prev_ratio * (1.0 - kSlack)) return {false, "(b) x/g(x) nondecreasing", prev_x, x};
        }
        prev_x = x;
        prev_g = gx;
        prev_ratio = ratio;
    }
    return {};
}

std::vector<double> default_g_probes() {
    std::vector<double> probes;
    for (int k = -60; k <= 60; ++k) probes.push_back(std::pow(10.0, k / 10.0));
    return probes;
}

double rhs_thm4(const TriangularRow& row, const GrowthFunction& g) {
    const auto probes = default_g_probes();
    const auto check = check_g_class(g, probes);
    if (!check.passed) {
        std::ostringstream os;
        os << "rhs_thm4: " << g.label << " violates condition " << check.condition << " at (" << check.x1
           << ", " << check.x2 << ")";
        throw InvalidInput(os.str());
    }
    double sum = 0.0;
    for (const auto& m : row.measures) sum += g_moment(m, g);
    const double b = row.b_n();
    const double gb = g(b);
    if (!(gb > 0.0)) throw InvalidInput("rhs_thm4: g(B_n) must be positive");
    return std::sqrt(sum) / (b * std::sqrt(gb));
}

double rhs_cor(const TriangularRow& row, double delta) {
    if (!(delta > 0.0 && delta <= 1.0)) throw InvalidInput("rhs_cor: delta must lie in (0, 1]");
    return power_rhs(row, delta);
}

std::vector<double> lindeberg_profile(std::span<const TriangularRow> rows, double eps) {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(lambda_n(r, eps));
    return out;
}

double fit_constant(std::span<const std::pair<double, double>> pairs) {
    if (pairs.empty()) throw InvalidInput("fit_constant: no data");
    double c = 0.0;
    for (const auto& [delta, rhs] : pairs) {
        if (!(rhs > 0.0)) throw InvalidInput("fit_constant: every rhs must be positive");
        c = std::max(c, delta / rhs);
    }
    return c;
}

BoundReport bound_report(const TriangularRow& row, double delta_measured, std::span<const double> epsilons,
                         const std::optional<GrowthFunction>& g, std::optional<double> cor_delta) {
    BoundReport r;
    r.n = static_cast<int>(row.size());
    r.delta_measured = delta_measured;
    for (double eps : epsilons) {
        r.lambda[eps] = lambda_n(row, eps);
        r.ell[eps] = ell_n(row, eps);
        r.rhs_thm3[eps] = std::sqrt(r.lambda[eps] + r.ell[eps]);
    }
    r.rhs_cg = rhs_cg(row);
    if (g) r.rhs_thm4 = rhs_thm4(row, *g);
    if (cor_delta) r.rhs_cor = rhs_cor(row, *cor_delta);
    return r;
}

}  // namespace freeclt
