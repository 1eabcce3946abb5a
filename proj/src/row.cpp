#include "freeclt/row.hpp"

#include <cmath>
#include <sstream>

#include "freeclt/error.hpp"

namespace freeclt {

double TriangularRow::b_n() const { return std::sqrt(b_n_sq); }

TriangularRow build_row(std::vector<Measure> measures) {
    if (measures.empty()) throw InvalidInput("triangular row: empty list of measures");
    TriangularRow row;
    row.sigma_sq.reserve(measures.size());
    for (std::size_t j = 0; j < measures.size(); ++j) {
        const double m = mean(measures[j]);
        if (std::abs(m) > 1e-9) {
            std::ostringstream os;
            os << "triangular row: measure " << j << " is not centered (mean " << m << ")";
            throw InvalidInput(os.str());
        }
        row.sigma_sq.push_back(moment(measures[j], 2));
        row.b_n_sq += row.sigma_sq.back();
    }
    if (!(row.b_n_sq > 0.0)) throw InvalidInput("triangular row: B_n^2 is zero");
    row.measures = std::move(measures);
    return row;
}

}  // namespace freeclt
