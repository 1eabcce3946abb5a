#pragma once

#include <span>
#include <vector>

#include "freeclt/measure.hpp"

namespace freeclt {

/// One row mu_1, ..., mu_n of a triangular array of centered measures,
/// with sigma_j^2 = m_2(mu_j) and B_n^2 = sum_j sigma_j^2 > 0.
struct TriangularRow {
    std::vector<Measure> measures;
    std::vector<double> sigma_sq;
    double b_n_sq = 0.0;

    std::size_t size() const { return measures.size(); }
    double b_n() const;
};

/// Rejects an empty list, a measure whose mean exceeds 1e-9 in absolute
/// value (the message names its index), and a zero total variance.
TriangularRow build_row(std::vector<Measure> measures);

}  // namespace freeclt
