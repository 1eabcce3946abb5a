#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "freeclt/bounds.hpp"
#include "freeclt/freeconv.hpp"
#include "freeclt/measure.hpp"
#include "freeclt/oracle.hpp"

namespace freeclt {

/// Distribution family generating the rows of a triangular array.
struct FamilySpec {
    enum class Kind { Rademacher, TwoPoint, Uniform, TruncatedPower, Mixed, LindebergCounterexample };

    Kind kind = Kind::Rademacher;
    double p = 0.5;            // TwoPoint
    double half_width = 1.0;   // Uniform
    double delta = 0.5;        // TruncatedPower
    double cut = 0.5;          // TruncatedPower
    std::vector<FamilySpec> members;  // Mixed, cycled over j

    std::string label() const;
};

/// Two-point law with mass p at sqrt((1-p)/p) and 1-p at -sqrt(p/(1-p)).
Measure two_point(double p);

/// Symmetric density proportional to |x|^-(3+delta) on cut <= |x| <= K, with
/// K chosen so the variance is one.
Measure truncated_power(double delta, double cut);

/// Measures mu_1..mu_n of row n.
std::vector<Measure> family_row(const FamilySpec& family, int n);

struct ExperimentConfig {
    FamilySpec family;
    std::vector<int> n_values;
    std::vector<double> epsilons{0.05, 0.1, 0.25, 0.5, 1.0};
    GrowthFunction g = GrowthFunction::abs_power(1.0);
    double cor_delta = 1.0;
    ConvolutionParams conv;
    std::optional<EnsembleSpec> oracle;
    std::string output_prefix = "freeclt";
    /// Fill wall_ms with measured times; off by default so CSVs are
    /// reproducible byte for byte.
    bool record_timing = false;
    /// `convolve` inputs.
    std::optional<Measure> mu;
    std::optional<Measure> nu;
};

FamilySpec family_from_json(const nlohmann::json& j);

/// Parses and validates; throws ConfigError naming the offending key.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

/// A CSV table: header plus rows of preformatted cells.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::string to_csv() const;
    static Table from_csv(const std::string& text);
};

/// Decimal with nine significant digits.
std::string format_number(double v);

/// Log-log plot of every numeric column against the first one.
std::string svg_plot(const Table& table, const std::string& title);

struct SweepPoint {
    int n = 0;
    double delta = 0.0;
    BoundReport report;
    double mass_defect = 0.0;
    double wall_ms = 0.0;
};

/// Delta(mu^(n), mu_w) and the bound columns for every configured n.
std::vector<SweepPoint> clt_sweep(const ExperimentConfig& config, unsigned threads);
Table clt_sweep_table(const ExperimentConfig& config, const std::vector<SweepPoint>& points);

struct LindebergResult {
    Table table;
    bool violated = false;
};
LindebergResult lindeberg_demo(const ExperimentConfig& config, unsigned threads);

/// Per n: Delta between the analytic mu^(n) and the Monte Carlo ESD.
Table oracle_check(const ExperimentConfig& config, unsigned threads);
constexpr double kOracleFlag = 0.03;

/// Per n: Lambda, ell, the truncation statistics with windows +-B_n and the
/// theorem right-hand sides.
Table bounds_report(const ExperimentConfig& config, unsigned threads);

/// Writes `<prefix>.<ext>`, creating parent directories.
void write_output(const std::string& prefix, const std::string& ext, const std::string& content);

}  // namespace freeclt
