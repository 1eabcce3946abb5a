#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "freeclt/freeconv.hpp"
#include "freeclt/measure.hpp"
#include "freeclt/row.hpp"

namespace freeclt {

/// (1 / B_n^2) sum_j int_{|x| > eps B_n} x^2 mu_j(dx), for eps in (0, 1].
double lambda_n(const TriangularRow& row, double eps);

/// (1 / B_n^3) sum_j int_{|x| <= eps B_n} |x|^3 mu_j(dx), for eps in (0, 1].
double ell_n(const TriangularRow& row, double eps);

/// Truncated measures nu_j and the statistics built from them.
struct TruncationSummary {
    std::vector<TruncationWindow> windows;
    std::vector<Measure> truncated;   // nu_j
    std::vector<double> alpha;
    std::vector<double> beta_sq;
    double m_n = 0.0;
    double n_n_sq = 0.0;
    double gamma_n = 0.0;
    /// sum_j int |x|^3 nu_j(dx).
    double abs_third_sum = 0.0;
    /// Law of (sum_j nu_j - M_n) / N_n under free convolution.
    std::optional<Measure> normalized_sum;
    double delta_n = 0.0;

    double n_n() const;
};

/// Builds nu_j by truncation to the windows and, unless `with_convolution`
/// is false, the free sum of the nu_j standardized by (M_n, N_n) together
/// with its Kolmogorov distance to the standard semicircle law. Throws
/// InvalidInput when N_n = 0.
TruncationSummary summarize_truncation(std::span<const Measure> measures,
                                       std::span<const TruncationWindow> windows,
                                       const ConvolutionParams& params = {},
                                       bool with_convolution = true);

/// Windows [-B_n, B_n] for every j.
TruncationSummary summarize_truncation(const TriangularRow& row, const ConvolutionParams& params = {},
                                       bool with_convolution = true);

/// 2 sqrt(2) scale (sum_j int |x|^3 nu_j(dx))^(1/2) / N_n^(3/2).
double delta_n_third_moment_bound(const TruncationSummary& summary, double scale);

/// Delta_n + Gamma_n + |ab - M_n| / (pi N_n) + (2 / pi) |a / N_n - 1|.
double rhs_thm2(const TruncationSummary& summary, double a, double b);

/// sup_x |(free sum of mu_j)((-inf, a(x + b)]) - F_w(x)| with F_w the standard
/// semicircle CDF.
double thm2_lhs(std::span<const Measure> measures, double a, double b,
                const ConvolutionParams& params = {});

/// (sum_j gamma_3(mu_j))^(1/2) / B_n^(3/2).
double rhs_cg(const TriangularRow& row);

/// (Lambda_n(eps) + ell_n(eps))^(1/2).
double rhs_thm3(const TriangularRow& row, double eps);

struct GClassCheck {
    bool passed = true;
    /// "nonnegative", "even", "(a) nondecreasing" or "(b) x/g(x) nondecreasing".
    std::string condition;
    /// Offending probe pair (x1 == x2 for single-point conditions).
    double x1 = 0.0;
    double x2 = 0.0;
};

/// Checks the class conditions of g at the sorted positive probes.
GClassCheck check_g_class(const GrowthFunction& g, std::span<const double> probes);

/// Log-spaced probes on [1e-6, 1e6].
std::vector<double> default_g_probes();

/// (sum_j int x^2 g(x) mu_j(dx))^(1/2) / (B_n g(B_n)^(1/2)); throws
/// InvalidInput naming the failed condition when g is outside the class.
double rhs_thm4(const TriangularRow& row, const GrowthFunction& g);

/// (sum_j gamma_{2+delta}(mu_j))^(1/2) / B_n^(1 + delta/2), delta in (0, 1].
double rhs_cor(const TriangularRow& row, double delta);

std::vector<double> lindeberg_profile(std::span<const TriangularRow> rows, double eps);

/// Smallest C with delta <= C rhs for every (delta, rhs) pair.
double fit_constant(std::span<const std::pair<double, double>> pairs);

struct BoundReport {
    int n = 0;
    double delta_measured = 0.0;
    std::map<double, double> lambda;
    std::map<double, double> ell;
    double rhs_cg = 0.0;
    std::map<double, double> rhs_thm3;
    std::optional<double> rhs_thm4;
    std::optional<double> rhs_cor;
    double fitted_c = 0.0;
};

/// Bound quantities of one row; `delta_measured` is supplied by the caller
/// and fitted_c is left for the caller to fill.
BoundReport bound_report(const TriangularRow& row, double delta_measured, std::span<const double> epsilons,
                         const std::optional<GrowthFunction>& g, std::optional<double> cor_delta);

}  // namespace freeclt
