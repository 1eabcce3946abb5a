#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "freeclt/measure.hpp"
#include "freeclt/row.hpp"

namespace freeclt {

using Complex = std::complex<double>;

/// A point strictly inside the upper half plane.
class HalfPlanePoint {
public:
    HalfPlanePoint(double re, double im);
    explicit HalfPlanePoint(Complex z) : HalfPlanePoint(z.real(), z.imag()) {}

    double re() const { return re_; }
    double im() const { return im_; }
    Complex value() const { return {re_, im_}; }

private:
    double re_;
    double im_;
};

struct ConvolutionParams {
    /// Inversion height as a fraction of the output support width.
    double eta = 1e-8;
    /// Uniform points of the output grid before adaptive refinement.
    int grid_points = 4096;
    /// Relative tolerance of the subordination fixed point.
    double fp_tol = 1e-12;
    int fp_max_iter = 20000;
    /// Largest accepted |1 - recovered mass| before renormalization.
    double mass_defect_limit = 1e-3;
    /// Largest mass error of linear interpolation tolerated per output cell.
    double refine_tol = 1e-9;
    /// Worker threads for transform evaluation; never changes the output.
    unsigned threads = 1;

    void validate() const;
};

struct ConvolutionDiagnostics {
    double mass_defect = 0.0;
    std::size_t output_points = 0;
    int max_iterations = 0;
    std::size_t evaluations = 0;

    void absorb(const ConvolutionDiagnostics& other);
};

/// Cauchy transform G(z) = int mu(dt) / (z - t) of a fixed measure.
///
/// The continuous part is integrated cell by cell in closed form. Cells far
/// from z are grouped in a binary tree whose nodes carry moments about their
/// centers, so an evaluation costs O(log cells) series terms instead of one
/// logarithm per cell.
class CauchyTransform {
public:
    explicit CauchyTransform(const Measure& mu);

    struct Value {
        Complex g;
        Complex dg;  // G'(z)
    };

    Value evaluate(Complex z) const;
    Complex operator()(Complex z) const { return evaluate(z).g; }

private:
    struct Cell {
        double a, b, center, half, f_center, slope;
    };
    struct Node {
        std::size_t lo, hi;   // cell range [lo, hi)
        double center, radius;
        int left = -1, right = -1;
        bool empty = false;
    };

    int build(std::size_t lo, std::size_t hi);
    void add_cell(const Cell& c, Complex z, Value& acc) const;

    std::vector<Atom> atoms_;
    std::vector<Cell> cells_;
    std::vector<Node> nodes_;
    std::vector<double> moments_;  // kOrder per node
    int root_ = -1;
};

Complex cauchy_transform(const Measure& mu, HalfPlanePoint z);

/// Fixed point omega_1(z) of w -> z + H_nu(z + H_mu(w)), H(w) = 1/G(w) - w,
/// so that G_{mu [+] nu}(z) = G_mu(omega_1(z)).
class SubordinationSolver {
public:
    SubordinationSolver(const Measure& mu, const Measure& nu, ConvolutionParams params);

    struct Result {
        Complex omega;
        Complex g;  // G_{mu [+] nu}(z)
        double residual = 0.0;
        int iterations = 0;
    };

    /// Picard iteration from `start`, damped when the residual grows, with
    /// backtracking Newton steps once it is small. Without a start the
    /// solution is continued down from a height comparable to the support
    /// width, where the iteration contracts. Throws NumericalFailure naming
    /// z and the last residual on non-convergence.
    Result solve(Complex z, std::optional<Complex> start = std::nullopt) const;

    const CauchyTransform& first() const { return mu_; }
    const CauchyTransform& second() const { return nu_; }

private:
    Result iterate(Complex z, Complex start) const;

    CauchyTransform mu_;
    CauchyTransform nu_;
    ConvolutionParams params_;
    double scale_;
};

Complex subordinator(const Measure& mu, const Measure& nu, HalfPlanePoint z,
                     const ConvolutionParams& params = {});

/// mu [+] nu recovered by Stieltjes inversion of G_mu(omega_1(x + i eta)).
///
/// Atoms of the result (at b + c whenever mu({b}) + nu({c}) > 1) are emitted
/// exactly; the rest is a piecewise-linear density on an adaptively refined
/// grid. Throws NumericalFailure when the mass defect exceeds the limit, the
/// recovered density is materially negative, or the mean/variance of the
/// result do not add up.
Measure free_convolve(const Measure& mu, const Measure& nu, const ConvolutionParams& params = {},
                      ConvolutionDiagnostics* diagnostics = nullptr);

enum class FoldOrder { Left, Balanced };

Measure free_convolve_n(std::span<const Measure> measures, const ConvolutionParams& params = {},
                        FoldOrder order = FoldOrder::Left,
                        ConvolutionDiagnostics* diagnostics = nullptr);

/// mu^(n): each mu_j rescaled by 1/B_n, then folded.
Measure clt_sum(const TriangularRow& row, const ConvolutionParams& params = {},
                ConvolutionDiagnostics* diagnostics = nullptr);

}  // namespace freeclt
