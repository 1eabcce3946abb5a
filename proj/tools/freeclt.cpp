#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "freeclt/error.hpp"
#include "freeclt/experiment.hpp"

namespace {

using namespace freeclt;

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct RunOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    unsigned threads = 1;
};

ExperimentConfig prepare(const RunOptions& opt) {
    auto config = load_config(opt.config);
    if (opt.seed && config.oracle) config.oracle->seed = *opt.seed;
    return config;
}

void emit(const ExperimentConfig& config, const std::string& ext, const std::string& content) {
    write_output(config.output_prefix, ext, content);
    std::cout << "wrote " << config.output_prefix << '.' << ext << '\n';
}

int run(const std::string& sub, const RunOptions& opt) {
    const auto config = prepare(opt);
    if (sub == "clt-sweep") {
        const auto points = clt_sweep(config, opt.threads);
        const auto table = clt_sweep_table(config, points);
        emit(config, "csv", table.to_csv());
        emit(config, "svg", svg_plot(table, "CLT sweep: " + config.family.label()));
    } else if (sub == "lindeberg") {
        const auto res = lindeberg_demo(config, opt.threads);
        emit(config, "csv", res.table.to_csv());
        std::cout << config.family.label() << ": " << (res.violated ? "Lindeberg violated" : "Lindeberg holds")
                  << '\n';
    } else if (sub == "oracle-check") {
        const auto table = oracle_check(config, opt.threads);
        emit(config, "csv", table.to_csv());
        for (const auto& r : table.rows)
            if (r[2] == "1") std::cerr << "n = " << r[0] << ": oracle distance " << r[1] << " above " << kOracleFlag << '\n';
    } else if (sub == "bounds-report") {
        emit(config, "csv", bounds_report(config, opt.threads).to_csv());
    } else if (sub == "convolve") {
        if (!config.mu || !config.nu) throw ConfigError("config: convolve needs 'mu' and 'nu' measures");
        ConvolutionDiagnostics diag;
        auto params = config.conv;
        params.threads = opt.threads;
        const auto out = free_convolve(*config.mu, *config.nu, params, &diag);
        emit(config, "json", to_json(out).dump(2) + "\n");
        std::cerr << "mass defect " << diag.mass_defect << ", " << diag.output_points << " grid points\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Numerical free additive convolution and free CLT rate experiments"};
    app.require_subcommand(1);

    RunOptions opt;
    auto* run_cmd = app.add_subcommand("run", "Run an experiment described by a JSON config");
    run_cmd->require_subcommand(1);
    for (const char* name : {"clt-sweep", "lindeberg", "oracle-check", "bounds-report", "convolve"}) {
        auto* sub = run_cmd->add_subcommand(name);
        sub->add_option("--config", opt.config, "JSON config path")->required();
        sub->add_option("--seed", opt.seed, "Oracle seed (overrides the config)");
        sub->add_option("--threads", opt.threads, "Worker threads; never changes results")
            ->check(CLI::PositiveNumber);
    }

    std::string csv_path, svg_path, title = "freeclt";
    auto* plot_cmd = app.add_subcommand("plot", "Render a CSV table as a log-log SVG");
    plot_cmd->add_option("--csv", csv_path)->required()->check(CLI::ExistingFile);
    plot_cmd->add_option("--out", svg_path)->required();
    plot_cmd->add_option("--title", title);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*plot_cmd) {
            std::ifstream in(csv_path);
            std::stringstream ss;
            ss << in.rdbuf();
            std::ofstream(svg_path) << svg_plot(Table::from_csv(ss.str()), title);
            return 0;
        }
        for (auto* sub : run_cmd->get_subcommands()) return run(sub->get_name(), opt);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const InvalidInput& e) {
        std::cerr << "error: invalid input: " << e.what() << '\n';
        return kExitConfig;
    } catch (const NumericalFailure& e) {
        std::cerr << "error: numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
