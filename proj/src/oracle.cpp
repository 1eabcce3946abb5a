#include "freeclt/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "freeclt/error.hpp"
#include "freeclt/parallel.hpp"

namespace freeclt {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace

void EnsembleSpec::validate() const {
    if (matrix_size < 16) throw InvalidInput("ensemble: matrix_size must be >= 16");
    if (trials < 1) throw InvalidInput("ensemble: trials must be >= 1");
}

std::vector<double> spectral_sample(const Measure& mu, int n) {
    if (n < 1) throw InvalidInput("spectral_sample: N must be positive");
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) out[i] = mu.quantile((i + 0.5) / n);
    return out;
}

std::vector<double> haar_orthogonal(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    RowMatrix g(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) g(i, j) = normal(rng);
    Eigen::HouseholderQR<RowMatrix> qr(g);
    RowMatrix q = qr.householderQ();
    const auto& r = qr.matrixQR();
    for (int j = 0; j < n; ++j)
        if (r(j, j) < 0.0) q.col(j) *= -1.0;
    return {q.data(), q.data() + static_cast<std::ptrdiff_t>(n) * n};
}

std::vector<double> jacobi_eigenvalues(std::vector<double> a, int n) {
    if (n < 1 || a.size() != static_cast<std::size_t>(n) * n)
        throw InvalidInput("jacobi_eigenvalues: matrix size mismatch");
    const auto at = [&](int i, int j) -> double& { return a[static_cast<std::size_t>(i) * n + j]; };
    double frob = 0.0;
    for (double v : a) frob += v * v;
    const double target = 1e-10 * std::sqrt(frob);
    constexpr int kMaxSweeps = 100;
    for (int sweep = 0;; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) off += at(i, j) * at(i, j);
        if (std::sqrt(2.0 * off) <= target) break;
        if (sweep == kMaxSweeps) {
            std::ostringstream os;
            os << "jacobi_eigenvalues: no convergence after " << kMaxSweeps << " sweeps (off-diagonal norm "
               << std::sqrt(2.0 * off) << ")";
            throw NumericalFailure(os.str());
        }
        for (int p = 0; p + 1 < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = at(p, q);
                if (apq == 0.0) continue;
                const double app = at(p, p), aqq = at(q, q);
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(1.0 + theta * theta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                double* rp = &at(p, 0);
                double* rq = &at(q, 0);
                for (int k = 0; k < n; ++k) {
                    const double x = rp[k], y = rq[k];
                    rp[k] = c * x - s * y;
                    rq[k] = s * x + c * y;
                }
                for (int k = 0; k < n; ++k) {
                    at(k, p) = rp[k];
                    at(k, q) = rq[k];
                }
                at(p, p) = app - t * apq;
                at(q, q) = aqq + t * apq;
                at(p, q) = at(q, p) = 0.0;
            }
        }
    }
    std::vector<double> eig(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) eig[i] = at(i, i);
    std::sort(eig.begin(), eig.end());
    return eig;
}

std::vector<double> tridiagonal_eigenvalues(const std::vector<double>& a, int n) {
    if (n < 1 || a.size() != static_cast<std::size_t>(n) * n)
        throw InvalidInput("tridiagonal_eigenvalues: matrix size mismatch");
    const Eigen::Map<const RowMatrix> m(a.data(), n, n);
    Eigen::SelfAdjointEigenSolver<RowMatrix> solver(m, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw NumericalFailure("tridiagonal_eigenvalues: no convergence");
    const auto& ev = solver.eigenvalues();
    std::vector<double> out(ev.data(), ev.data() + n);
    std::sort(out.begin(), out.end());
    return out;
}

std::uint64_t trial_seed(std::uint64_t seed, int trial) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(trial) + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

Measure free_sum_esd(std::span<const Measure> measures, const EnsembleSpec& spec, unsigned threads) {
    spec.validate();
    if (measures.empty()) throw InvalidInput("free_sum_esd: empty list of measures");
    const int n = spec.matrix_size;
    std::vector<std::vector<double>> spectra;
    for (const auto& m : measures) spectra.push_back(spectral_sample(m, n));

    std::vector<std::vector<double>> per_trial(static_cast<std::size_t>(spec.trials));
    parallel_for(per_trial.size(), threads, [&](std::size_t trial) {
        std::mt19937_64 rng(trial_seed(spec.seed, static_cast<int>(trial)));
        RowMatrix sum = RowMatrix::Zero(n, n);
        sum.diagonal() = Eigen::Map<const Eigen::VectorXd>(spectra[0].data(), n);
        for (std::size_t j = 1; j < spectra.size(); ++j) {
            const auto qv = haar_orthogonal(n, rng);
            const Eigen::Map<const RowMatrix> q(qv.data(), n, n);
            const Eigen::Map<const Eigen::VectorXd> d(spectra[j].data(), n);
            RowMatrix qd = q * d.asDiagonal();
            sum.noalias() += qd * q.transpose();
        }
        // Symmetrize away rounding before the symmetric solvers.
        RowMatrix sym = 0.5 * (sum + sum.transpose());
        std::vector<double> flat(sym.data(), sym.data() + static_cast<std::ptrdiff_t>(n) * n);
        try {
            per_trial[trial] = spec.solver == EigenSolver::Jacobi ? jacobi_eigenvalues(std::move(flat), n)
                                                                  : tridiagonal_eigenvalues(flat, n);
        } catch (const NumericalFailure& e) {
            std::ostringstream os;
            os << "free_sum_esd: trial " << trial << ": " << e.what();
            throw NumericalFailure(os.str());
        }
    });
    std::vector<double> pooled;
    pooled.reserve(static_cast<std::size_t>(n) * spec.trials);
    for (const auto& t : per_trial) pooled.insert(pooled.end(), t.begin(), t.end());
    return Measure::empirical(pooled);
}

}  // namespace freeclt
