#pragma once

#include <cstdint>
#include <vector>

#include "dlstm/data.hpp"
#include "dlstm/graph.hpp"
#include "dlstm/lstm.hpp"

namespace dlstm {

enum class Schedule { Lbc, Cbl, Centralized };

struct TrainConfig {
    Schedule schedule = Schedule::Lbc;
    std::size_t epochs = 1;
    std::size_t consensus_rounds = 20;  // K averaging iterations per consensus phase
    std::size_t batch_size = 0;         // 0 = full batch
    double learning_rate = 0.1;
    std::uint64_t seed = 0;
    std::size_t hidden_size = 16;
    double disagreement_tolerance = 1e-6;
    bool consensus_every_batch = false;
    bool parallel = true;                // OpenMP over agents / samples
    bool record_param_history = false;   // per-epoch packed params, for equivalence tests
};

struct EpochStats {
    std::vector<double> train_loss;  // per agent, on its own shard
    std::vector<double> val_loss;    // per agent, on the shared validation shard
    double mean_params_val_loss = 0.0;
    double disagreement = 0.0;
};

struct TrainReport {
    std::vector<EpochStats> history;
    std::vector<FlatVector> final_params;  // per agent, after trailing consensus
    FlatVector consensus_params;           // coordinate-wise mean of final_params
    std::size_t trailing_rounds = 0;
    double local_seconds = 0.0;
    double consensus_seconds = 0.0;
    double eval_seconds = 0.0;
    std::vector<std::vector<FlatVector>> param_history;  // [epoch][agent], if recorded
};

// Phi = Theta - eta * grad(loss on batch); the input params are untouched.
LstmParams local_gradient_step(const LstmParams& params, std::span<const SequenceSample> batch,
                               double learning_rate);

// Applies v <- M v coordinate-wise, K times, agents combined in index order.
std::vector<FlatVector> consensus_round(const std::vector<FlatVector>& candidates,
                                        const MixingMatrix& m, std::size_t rounds);

// Max pairwise 2-norm distance between agents' parameter vectors.
double disagreement(const std::vector<FlatVector>& params);

TrainReport train_lbc(const TrainConfig& cfg, const std::vector<Shard>& shards,
                      const GraphTopology& g, const Shard& validation);
TrainReport train_cbl(const TrainConfig& cfg, const std::vector<Shard>& shards,
                      const GraphTopology& g, const Shard& validation);
TrainReport train_centralized(const TrainConfig& cfg, const Shard& full, const Shard& validation);

}  // namespace dlstm
