#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dlstm/data.hpp"
#include "dlstm/experiment.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Distributed LSTM load-forecasting experiment runner"};
    app.require_subcommand(1);

    // gen-data
    std::size_t days = 730;
    std::uint64_t seed = 7;
    std::string out_path;
    CLI::App* gen = app.add_subcommand("gen-data", "Generate a synthetic daily load CSV");
    gen->add_option("--days", days, "Number of days (>= 30)")->capture_default_str();
    gen->add_option("--seed", seed, "Generator seed")->capture_default_str();
    gen->add_option("--out", out_path, "Output CSV path")->required();

    // run
    std::string config_path;
    CLI::App* run = app.add_subcommand("run", "Run an experiment from a JSON config");
    run->add_option("config", config_path, "Config file path")->required();

    // compare
    std::vector<std::string> report_paths;
    CLI::App* compare = app.add_subcommand("compare", "Tabulate metrics from report.json files");
    compare->add_option("reports", report_paths, "report.json paths (>= 2)")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            const auto records = dlstm::gen_synthetic(days, seed);
            dlstm::write_series_csv(out_path, records);
            std::cout << "wrote " << records.size() << " records to " << out_path << "\n";
        } else if (run->parsed()) {
            const auto cfg = dlstm::load_experiment_config(config_path);
            const auto result = dlstm::run_experiment(cfg);
            std::cout << "report:      " << result.report_json_path << "\n"
                      << "history:     " << result.history_csv_path << "\n"
                      << "predictions: " << result.predictions_csv_path << "\n"
                      << "timing:      " << result.timing_json_path << "\n"
                      << "test MAPE " << result.metrics.mape * 100.0 << "%  MAE "
                      << result.metrics.mae << "  MSE " << result.metrics.mse_plain << "\n";
        } else if (compare->parsed()) {
            std::cout << dlstm::compare_reports(report_paths);
        }
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    }
    return 0;
}
