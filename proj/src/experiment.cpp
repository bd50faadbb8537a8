#include "dlstm/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace dlstm {

namespace {

using nlohmann::json;

[[noreturn]] void config_error(const std::string& field, const std::string& what) {
    throw std::runtime_error("config: field '" + field + "': " + what);
}

Schedule parse_schedule(const std::string& s) {
    if (s == "lbc") return Schedule::Lbc;
    if (s == "cbl") return Schedule::Cbl;
    if (s == "centralized") return Schedule::Centralized;
    config_error("schedule", "must be one of lbc, cbl, centralized (got '" + s + "')");
}

std::string schedule_name(Schedule s) {
    switch (s) {
        case Schedule::Lbc: return "lbc";
        case Schedule::Cbl: return "cbl";
        default: return "centralized";
    }
}

// Fixed shortest-round-trip formatting so emitted CSVs are reproducible.
std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

json config_echo(const ExperimentConfig& cfg) {
    json j;
    if (cfg.csv_path) {
        j["data"]["csv"] = *cfg.csv_path;
    } else {
        j["data"]["synthetic"] = {{"days", cfg.synthetic->days}, {"seed", cfg.synthetic->seed}};
    }
    j["split"] = {{"train", cfg.train_fraction},
                  {"validation", cfg.val_fraction},
                  {"test", cfg.test_fraction}};
    j["topology"]["n_agents"] = cfg.n_agents;
    if (cfg.topology_name) {
        j["topology"]["name"] = *cfg.topology_name;
    } else {
        json edges = json::array();
        for (const auto& [a, b] : cfg.edges) edges.push_back({a, b});
        j["topology"]["edges"] = edges;
    }
    j["shard_strategy"] =
        cfg.shard_strategy == ShardStrategy::Contiguous ? "contiguous" : "round_robin";
    j["schedule"] = schedule_name(cfg.train.schedule);
    j["epochs"] = cfg.train.epochs;
    j["consensus_rounds"] = cfg.train.consensus_rounds;
    if (cfg.train.batch_size == 0) {
        j["batch_size"] = "full";
    } else {
        j["batch_size"] = cfg.train.batch_size;
    }
    j["learning_rate"] = cfg.train.learning_rate;
    j["seed"] = cfg.train.seed;
    j["hidden_size"] = cfg.train.hidden_size;
    j["disagreement_tolerance"] = cfg.train.disagreement_tolerance;
    j["consensus_every_batch"] = cfg.train.consensus_every_batch;
    j["output_dir"] = cfg.output_dir;
    return j;
}

}  // namespace

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& ex) {
        throw std::runtime_error("config: invalid JSON in '" + path + "': " + ex.what());
    }

    ExperimentConfig cfg;
    if (!j.contains("data")) config_error("data", "required");
    const json& data = j["data"];
    if (data.contains("csv")) {
        cfg.csv_path = data["csv"].get<std::string>();
        if (!std::filesystem::exists(*cfg.csv_path)) {
            config_error("data.csv", "file does not exist: " + *cfg.csv_path);
        }
    } else if (data.contains("synthetic")) {
        SyntheticSpec spec;
        spec.days = data["synthetic"].value("days", spec.days);
        spec.seed = data["synthetic"].value("seed", spec.seed);
        cfg.synthetic = spec;
    } else {
        config_error("data", "needs 'csv' or 'synthetic'");
    }

    if (j.contains("split")) {
        cfg.train_fraction = j["split"].value("train", cfg.train_fraction);
        cfg.val_fraction = j["split"].value("validation", cfg.val_fraction);
        cfg.test_fraction = j["split"].value("test", cfg.test_fraction);
    }
    if (std::abs(cfg.train_fraction + cfg.val_fraction + cfg.test_fraction - 1.0) > 1e-9) {
        config_error("split", "fractions must sum to 1");
    }

    if (!j.contains("schedule")) config_error("schedule", "required");
    cfg.train.schedule = parse_schedule(j["schedule"].get<std::string>());

    if (j.contains("topology")) {
        const json& topo = j["topology"];
        cfg.n_agents = topo.value("n_agents", std::size_t{1});
        if (topo.contains("name")) {
            cfg.topology_name = topo["name"].get<std::string>();
        } else if (topo.contains("edges")) {
            for (const auto& e : topo["edges"]) {
                if (!e.is_array() || e.size() != 2) config_error("topology.edges", "expected pairs");
                cfg.edges.emplace_back(e[0].get<std::size_t>(), e[1].get<std::size_t>());
            }
        } else if (cfg.n_agents > 1) {
            config_error("topology", "needs 'name' or 'edges' when n_agents > 1");
        }
    }
    if (cfg.train.schedule == Schedule::Centralized) cfg.n_agents = 1;
    if (cfg.n_agents == 0) config_error("topology.n_agents", "must be >= 1");

    if (j.contains("shard_strategy")) {
        const std::string s = j["shard_strategy"].get<std::string>();
        if (s == "contiguous") {
            cfg.shard_strategy = ShardStrategy::Contiguous;
        } else if (s == "round_robin") {
            cfg.shard_strategy = ShardStrategy::RoundRobin;
        } else {
            config_error("shard_strategy", "must be contiguous or round_robin");
        }
    }

    cfg.train.epochs = j.value("epochs", cfg.train.epochs);
    cfg.train.consensus_rounds = j.value("consensus_rounds", cfg.train.consensus_rounds);
    if (j.contains("batch_size")) {
        if (j["batch_size"].is_string()) {
            if (j["batch_size"].get<std::string>() != "full") {
                config_error("batch_size", "must be a positive integer or \"full\"");
            }
            cfg.train.batch_size = 0;
        } else {
            cfg.train.batch_size = j["batch_size"].get<std::size_t>();
        }
    }
    cfg.train.learning_rate = j.value("learning_rate", cfg.train.learning_rate);
    cfg.train.seed = j.value("seed", cfg.train.seed);
    cfg.train.hidden_size = j.value("hidden_size", cfg.train.hidden_size);
    cfg.train.disagreement_tolerance =
        j.value("disagreement_tolerance", cfg.train.disagreement_tolerance);
    cfg.train.consensus_every_batch =
        j.value("consensus_every_batch", cfg.train.consensus_every_batch);
    cfg.train.parallel = j.value("parallel", cfg.train.parallel);
    cfg.output_dir = j.value("output_dir", cfg.output_dir);

    if (cfg.train.epochs == 0) config_error("epochs", "must be >= 1");
    if (cfg.train.hidden_size == 0) config_error("hidden_size", "must be >= 1");
    if (cfg.train.learning_rate <= 0.0 || cfg.train.learning_rate > 1.0) {
        config_error("learning_rate", "must be in (0, 1]");
    }
    return cfg;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    const std::vector<DailyRecord> records =
        cfg.csv_path ? parse_series(*cfg.csv_path)
                     : gen_synthetic(cfg.synthetic->days, cfg.synthetic->seed);
    if (records.size() < 9) throw std::runtime_error("run_experiment: dataset too small");

    const std::size_t n_samples = records.size() - 8;
    const auto n_train = static_cast<std::size_t>(std::floor(cfg.train_fraction * n_samples));
    const auto n_val = static_cast<std::size_t>(std::floor(cfg.val_fraction * n_samples));
    if (n_train == 0 || n_train + n_val >= n_samples) {
        throw std::runtime_error("run_experiment: split leaves an empty partition");
    }

    // Normalizer sees only the training date range.
    const Normalizer norm =
        fit_normalizer(std::span(records.data(), n_train + 8));
    const std::vector<SequenceSample> samples = build_samples(records, norm);

    const std::vector<SequenceSample> train_samples(samples.begin(),
                                                    samples.begin() + ptrdiff_t(n_train));
    Shard validation;
    validation.samples.assign(samples.begin() + ptrdiff_t(n_train),
                              samples.begin() + ptrdiff_t(n_train + n_val));
    validation.provenance = "validation";
    const std::vector<SequenceSample> test_samples(samples.begin() + ptrdiff_t(n_train + n_val),
                                                   samples.end());

    GraphTopology topo =
        cfg.topology_name ? named_topology(*cfg.topology_name, cfg.n_agents)
                          : build_topology(cfg.n_agents, cfg.edges);

    ExperimentResult result;
    result.contraction = cfg.n_agents > 1 ? contraction_factor(metropolis_weights(topo)) : 0.0;

    if (cfg.train.schedule == Schedule::Centralized) {
        Shard full{train_samples, "full"};
        result.report = train_centralized(cfg.train, full, validation);
    } else {
        const std::vector<Shard> shards =
            shard_dataset(train_samples, cfg.n_agents, cfg.shard_strategy);
        result.report = cfg.train.schedule == Schedule::Lbc
                            ? train_lbc(cfg.train, shards, topo, validation)
                            : train_cbl(cfg.train, shards, topo, validation);
    }

    // Evaluate the consensus model on the held-out test split, in raw units.
    const SequenceSample& probe = samples[0];
    const LstmParams model = unpack_params(result.report.consensus_params, probe.steps[0].size(),
                                           cfg.train.hidden_size, probe.readout_context.size());
    std::vector<double> actual, forecast;
    actual.reserve(test_samples.size());
    forecast.reserve(test_samples.size());
    for (const SequenceSample& s : test_samples) {
        actual.push_back(denormalize(norm, s.target, Feature::Load));
        forecast.push_back(denormalize(norm, predict(model, s), Feature::Load));
    }
    result.metrics = evaluate(actual, forecast);

    // Emit artifacts.
    std::filesystem::create_directories(cfg.output_dir);
    const std::filesystem::path out(cfg.output_dir);
    result.report_json_path = (out / "report.json").string();
    result.history_csv_path = (out / "history.csv").string();
    result.predictions_csv_path = (out / "predictions.csv").string();
    result.timing_json_path = (out / "timing.json").string();

    json report;
    report["config"] = config_echo(cfg);
    report["contraction_factor"] = result.contraction;
    report["trailing_rounds"] = result.report.trailing_rounds;
    json hist = json::array();
    for (std::size_t e = 0; e < result.report.history.size(); ++e) {
        const EpochStats& st = result.report.history[e];
        hist.push_back({{"epoch", e},
                        {"train_loss", st.train_loss},
                        {"val_loss", st.val_loss},
                        {"mean_params_val_loss", st.mean_params_val_loss},
                        {"disagreement", st.disagreement}});
    }
    report["history"] = hist;
    report["final_disagreement"] = disagreement(result.report.final_params);
    report["metrics"] = {{"mape", result.metrics.mape},
                         {"mae", result.metrics.mae},
                         {"mse_plain", result.metrics.mse_plain},
                         {"mse_relative", result.metrics.mse_relative},
                         {"n", result.metrics.n}};
    {
        std::ofstream f(result.report_json_path);
        f << report.dump(2) << '\n';
        if (!f) throw std::runtime_error("run_experiment: failed writing report.json");
    }
    {
        std::ofstream f(result.history_csv_path);
        f << "epoch,agent,train_loss,val_loss,disagreement\n";
        for (std::size_t e = 0; e < result.report.history.size(); ++e) {
            const EpochStats& st = result.report.history[e];
            for (std::size_t a = 0; a < st.train_loss.size(); ++a) {
                f << e << ',' << a << ',' << fmt(st.train_loss[a]) << ',' << fmt(st.val_loss[a])
                  << ',' << fmt(st.disagreement) << '\n';
            }
        }
        if (!f) throw std::runtime_error("run_experiment: failed writing history.csv");
    }
    {
        std::ofstream f(result.predictions_csv_path);
        f << "index,actual,forecast\n";
        for (std::size_t i = 0; i < actual.size(); ++i) {
            f << i << ',' << fmt(actual[i]) << ',' << fmt(forecast[i]) << '\n';
        }
        if (!f) throw std::runtime_error("run_experiment: failed writing predictions.csv");
    }
    {
        // Wall clock lives in its own file so report.json stays reproducible.
        json timing = {{"local_seconds", result.report.local_seconds},
                       {"consensus_seconds", result.report.consensus_seconds},
                       {"eval_seconds", result.report.eval_seconds},
                       {"total_seconds", result.report.local_seconds +
                                             result.report.consensus_seconds +
                                             result.report.eval_seconds}};
        std::ofstream f(result.timing_json_path);
        f << timing.dump(2) << '\n';
        if (!f) throw std::runtime_error("run_experiment: failed writing timing.json");
    }
    return result;
}

std::string compare_reports(const std::vector<std::string>& report_paths) {
    if (report_paths.size() < 2) {
        throw std::runtime_error("compare: need at least two report files");
    }
    std::string table = "| run | schedule | mape | mae | mse_plain | mse_relative |\n";
    table += "|---|---|---|---|---|---|\n";
    for (const std::string& path : report_paths) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("compare: cannot open '" + path + "'");
        json j;
        try {
            in >> j;
        } catch (const json::parse_error& ex) {
            throw std::runtime_error("compare: invalid JSON in '" + path + "': " + ex.what());
        }
        if (!j.contains("metrics") || !j["metrics"].contains("mape")) {
            throw std::runtime_error("compare: missing metrics in '" + path + "'");
        }
        const json& m = j["metrics"];
        const std::string schedule =
            j.contains("config") && j["config"].contains("schedule")
                ? j["config"]["schedule"].get<std::string>()
                : "?";
        table += "| " + path + " | " + schedule + " | " + fmt(m["mape"].get<double>()) + " | " +
                 fmt(m["mae"].get<double>()) + " | " + fmt(m["mse_plain"].get<double>()) + " | " +
                 fmt(m["mse_relative"].get<double>()) + " |\n";
    }
    return table;
}

}  // namespace dlstm
