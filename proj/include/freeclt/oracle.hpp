#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "freeclt/measure.hpp"

namespace freeclt {

enum class EigenSolver { Tridiagonal, Jacobi };

struct EnsembleSpec {
    int matrix_size = 500;
    int trials = 20;
    std::uint64_t seed = 0;
    EigenSolver solver = EigenSolver::Tridiagonal;

    void validate() const;
};

/// Quantiles of mu at (i - 1/2) / N, i = 1..N.
std::vector<double> spectral_sample(const Measure& mu, int n);

/// Row-major n x n orthogonal matrix: Q of a QR factorization of a standard
/// Gaussian matrix with R's diagonal made positive.
std::vector<double> haar_orthogonal(int n, std::mt19937_64& rng);

/// Eigenvalues (ascending) of a row-major symmetric matrix by cyclic Jacobi
/// rotations; stops once the off-diagonal Frobenius norm is below
/// 1e-10 times the Frobenius norm. Throws NumericalFailure after 100 sweeps.
std::vector<double> jacobi_eigenvalues(std::vector<double> a, int n);

/// Eigenvalues (ascending) by Householder tridiagonalization and implicit QL.
std::vector<double> tridiagonal_eigenvalues(const std::vector<double>& a, int n);

/// Seed of trial `trial`, derived by splitmix64 from (seed, trial).
std::uint64_t trial_seed(std::uint64_t seed, int trial);

/// Pooled eigenvalues of sum_j O_j diag(spectral_sample(mu_j)) O_j^T over
/// independent trials, as an empirical measure. The first summand is left
/// unrotated, which does not change the joint spectral law.
Measure free_sum_esd(std::span<const Measure> measures, const EnsembleSpec& spec, unsigned threads = 1);

}  // namespace freeclt
