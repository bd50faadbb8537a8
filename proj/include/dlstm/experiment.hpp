#pragma once

#include <optional>
#include <string>

#include "dlstm/data.hpp"
#include "dlstm/graph.hpp"
#include "dlstm/metrics.hpp"
#include "dlstm/trainer.hpp"

namespace dlstm {

struct SyntheticSpec {
    std::size_t days = 730;
    std::uint64_t seed = 7;
};

struct ExperimentConfig {
    std::optional<std::string> csv_path;     // exactly one of csv_path / synthetic
    std::optional<SyntheticSpec> synthetic;
    double train_fraction = 0.8;
    double val_fraction = 0.1;
    double test_fraction = 0.1;
    std::optional<std::string> topology_name;  // ring | path | complete | star
    std::size_t n_agents = 1;
    std::vector<std::pair<std::size_t, std::size_t>> edges;  // explicit topology
    ShardStrategy shard_strategy = ShardStrategy::Contiguous;
    TrainConfig train;
    std::string output_dir = ".";
};

// Parses and validates the JSON config file; field-level messages on error.
ExperimentConfig load_experiment_config(const std::string& path);

struct ExperimentResult {
    TrainReport report;
    EvalReport metrics;
    double contraction = 0.0;
    std::string report_json_path;
    std::string history_csv_path;
    std::string predictions_csv_path;
    std::string timing_json_path;
};

// Runs the configured experiment and writes report.json, history.csv,
// predictions.csv and timing.json into output_dir. Everything except
// timing.json is byte-reproducible for a fixed config and seed.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

// Markdown comparison table of the metrics in several report.json files,
// rows in argument order.
std::string compare_reports(const std::vector<std::string>& report_paths);

}  // namespace dlstm
