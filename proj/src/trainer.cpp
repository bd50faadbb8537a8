#include "dlstm/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dlstm {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Distinct stream per (run, agent, epoch) for the mini-batch shuffle.
std::uint64_t shuffle_seed(std::uint64_t seed, std::size_t agent, std::size_t epoch) {
    std::uint64_t x = seed ^ (0x9e3779b97f4a7c15ULL * (agent + 1)) ^ (0xbf58476d1ce4e5b9ULL * (epoch + 1));
    x ^= x >> 30;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

std::vector<std::vector<SequenceSample>> make_batches(const Shard& shard, std::size_t batch_size,
                                                      std::uint64_t seed) {
    const std::size_t n = shard.samples.size();
    if (batch_size == 0 || batch_size >= n) {
        return {shard.samples};  // full batch, natural order
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<std::vector<SequenceSample>> batches;
    for (std::size_t pos = 0; pos < n; pos += batch_size) {
        const std::size_t len = std::min(batch_size, n - pos);
        std::vector<SequenceSample> batch;
        batch.reserve(len);
        for (std::size_t k = 0; k < len; ++k) batch.push_back(shard.samples[order[pos + k]]);
        batches.push_back(std::move(batch));
    }
    return batches;
}

FlatVector mean_vector(const std::vector<FlatVector>& vs) {
    FlatVector mean(vs[0].size(), 0.0);
    for (const FlatVector& v : vs)
        for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += v[k];
    const double inv = 1.0 / static_cast<double>(vs.size());
    for (double& e : mean) e *= inv;
    return mean;
}

struct Dims {
    std::size_t input = 0, extras = 0;
};

Dims infer_dims(const std::vector<Shard>& shards) {
    for (const Shard& s : shards) {
        if (s.samples.empty()) throw std::invalid_argument("train: empty shard");
    }
    const SequenceSample& first = shards[0].samples[0];
    if (first.steps.empty()) throw std::invalid_argument("train: sample with empty sequence");
    return Dims{first.steps[0].size(), first.readout_context.size()};
}

TrainReport run_training(const TrainConfig& cfg, const std::vector<Shard>& shards,
                         const GraphTopology& g, const Shard& validation) {
    if (cfg.epochs == 0) throw std::invalid_argument("train: epochs must be >= 1");
    if (cfg.learning_rate <= 0.0 || cfg.learning_rate > 1.0) {
        throw std::invalid_argument("train: learning_rate must be in (0, 1]");
    }
    if (shards.size() != g.n_agents) {
        throw std::invalid_argument("train: shard count must equal n_agents");
    }
    const bool distributed = g.n_agents > 1;
    if (distributed && cfg.consensus_rounds == 0) {
        throw std::invalid_argument("train: consensus_rounds must be >= 1");
    }
    if (!is_connected(g)) throw std::invalid_argument("train: topology must be connected");

    const Dims dims = infer_dims(shards);
    const std::size_t n_agents = g.n_agents;
    const MixingMatrix mixing = metropolis_weights(g);

    // All agents start from the same seeded initialization.
    std::vector<LstmParams> agents(n_agents,
                                   init_params(dims.input, cfg.hidden_size, dims.extras, cfg.seed));

    TrainReport report;
    report.history.reserve(cfg.epochs);

    auto pack_all = [&agents, n_agents]() {
        std::vector<FlatVector> packed(n_agents);
        for (std::size_t a = 0; a < n_agents; ++a) packed[a] = pack_params(agents[a]);
        return packed;
    };
    auto unpack_all = [&](const std::vector<FlatVector>& packed) {
        for (std::size_t a = 0; a < n_agents; ++a) {
            agents[a] = unpack_params(packed[a], dims.input, cfg.hidden_size, dims.extras);
        }
    };
    auto consensus_phase = [&](std::size_t rounds) {
        if (!distributed) return;
        const auto t0 = Clock::now();
        unpack_all(consensus_round(pack_all(), mixing, rounds));
        report.consensus_seconds += seconds_since(t0);
    };

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        if (cfg.schedule == Schedule::Cbl) consensus_phase(cfg.consensus_rounds);

        // Local phase: per-agent mini-batch gradient descent.
        const auto t_local = Clock::now();
        std::vector<std::vector<std::vector<SequenceSample>>> batches(n_agents);
        for (std::size_t a = 0; a < n_agents; ++a) {
            batches[a] = make_batches(shards[a], cfg.batch_size,
                                      shuffle_seed(cfg.seed, a, epoch));
        }

        if (cfg.consensus_every_batch && distributed) {
            std::size_t max_batches = 0;
            for (const auto& b : batches) max_batches = std::max(max_batches, b.size());
            for (std::size_t b = 0; b < max_batches; ++b) {
                const auto t_step = Clock::now();
                for (std::size_t a = 0; a < n_agents; ++a) {
                    if (b < batches[a].size()) {
                        agents[a] = local_gradient_step(agents[a], batches[a][b], cfg.learning_rate);
                    }
                }
                report.local_seconds += seconds_since(t_step);
                consensus_phase(cfg.consensus_rounds);
            }
        } else {
            auto agent_pass = [&](std::size_t a) {
                for (const auto& batch : batches[a]) {
                    agents[a] = local_gradient_step(agents[a], batch, cfg.learning_rate);
                }
            };
            if (cfg.parallel && n_agents > 1) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
                for (std::ptrdiff_t a = 0; a < static_cast<std::ptrdiff_t>(n_agents); ++a) {
                    agent_pass(static_cast<std::size_t>(a));
                }
#else
                for (std::size_t a = 0; a < n_agents; ++a) agent_pass(a);
#endif
            } else if (cfg.parallel && n_agents == 1) {
                // single agent: parallelize within the batch gradient instead
                for (const auto& batch : batches[0]) {
                    const FlatVector grad = backward_bptt_parallel(agents[0], batch);
                    FlatVector theta = pack_params(agents[0]);
                    for (std::size_t k = 0; k < theta.size(); ++k) {
                        theta[k] -= cfg.learning_rate * grad[k];
                    }
                    agents[0] = unpack_params(theta, dims.input, cfg.hidden_size, dims.extras);
                }
            } else {
                for (std::size_t a = 0; a < n_agents; ++a) agent_pass(a);
            }
            report.local_seconds += seconds_since(t_local);

            if (cfg.schedule == Schedule::Lbc) consensus_phase(cfg.consensus_rounds);
        }

        // Per-epoch bookkeeping.
        const auto t_eval = Clock::now();
        EpochStats stats;
        stats.train_loss.resize(n_agents);
        stats.val_loss.resize(n_agents);
        for (std::size_t a = 0; a < n_agents; ++a) {
            stats.train_loss[a] = empirical_loss(agents[a], shards[a].samples);
            if (!std::isfinite(stats.train_loss[a])) {
                throw std::runtime_error("train: diverged (non-finite loss) at epoch " +
                                         std::to_string(epoch));
            }
            stats.val_loss[a] =
                validation.samples.empty() ? 0.0 : empirical_loss(agents[a], validation.samples);
        }
        const auto packed = pack_all();
        stats.disagreement = disagreement(packed);
        if (validation.samples.empty()) {
            stats.mean_params_val_loss = 0.0;
        } else {
            const LstmParams mean_params =
                unpack_params(mean_vector(packed), dims.input, cfg.hidden_size, dims.extras);
            stats.mean_params_val_loss = empirical_loss(mean_params, validation.samples);
        }
        report.history.push_back(std::move(stats));
        report.eval_seconds += seconds_since(t_eval);

        if (cfg.record_param_history) report.param_history.push_back(packed);
    }

    // Trailing consensus until the agents agree.
    auto packed = pack_all();
    if (distributed) {
        const auto t0 = Clock::now();
        std::size_t rounds = 0;
        while (disagreement(packed) > cfg.disagreement_tolerance && rounds < 1000) {
            packed = consensus_round(packed, mixing, 1);
            ++rounds;
        }
        report.trailing_rounds = rounds;
        report.consensus_seconds += seconds_since(t0);
        unpack_all(packed);
    }
    report.final_params = packed;
    report.consensus_params = mean_vector(packed);
    return report;
}

}  // namespace

LstmParams local_gradient_step(const LstmParams& params, std::span<const SequenceSample> batch,
                               double learning_rate) {
    const FlatVector grad = backward_bptt(params, batch);
    FlatVector theta = pack_params(params);
    for (std::size_t k = 0; k < theta.size(); ++k) theta[k] -= learning_rate * grad[k];
    return unpack_params(theta, params.input_size, params.hidden_size, params.readout_extras);
}

std::vector<FlatVector> consensus_round(const std::vector<FlatVector>& candidates,
                                        const MixingMatrix& m, std::size_t rounds) {
    const std::size_t n = candidates.size();
    if (n != m.size()) throw std::invalid_argument("consensus_round: mixing size mismatch");
    const std::size_t dim = candidates.empty() ? 0 : candidates[0].size();
    for (const FlatVector& v : candidates) {
        if (v.size() != dim) throw std::invalid_argument("consensus_round: vector length mismatch");
    }
    std::vector<FlatVector> cur = candidates;
    std::vector<FlatVector> next(n, FlatVector(dim, 0.0));
    for (std::size_t r = 0; r < rounds; ++r) {
        for (std::size_t i = 0; i < n; ++i) {
            FlatVector& out = next[i];
            std::fill(out.begin(), out.end(), 0.0);
            for (std::size_t j = 0; j < n; ++j) {
                const double w = m.weights(i, j);
                if (w == 0.0) continue;
                const FlatVector& in = cur[j];
                for (std::size_t k = 0; k < dim; ++k) out[k] += w * in[k];
            }
        }
        std::swap(cur, next);
    }
    return cur;
}

double disagreement(const std::vector<FlatVector>& params) {
    if (params.empty()) throw std::invalid_argument("disagreement: empty list");
    const std::size_t dim = params[0].size();
    for (const FlatVector& v : params) {
        if (v.size() != dim) throw std::invalid_argument("disagreement: length mismatch");
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        for (std::size_t j = i + 1; j < params.size(); ++j) {
            double sq = 0.0;
            for (std::size_t k = 0; k < dim; ++k) {
                const double d = params[i][k] - params[j][k];
                sq += d * d;
            }
            worst = std::max(worst, std::sqrt(sq));
        }
    }
    return worst;
}

TrainReport train_lbc(const TrainConfig& cfg, const std::vector<Shard>& shards,
                      const GraphTopology& g, const Shard& validation) {
    TrainConfig c = cfg;
    c.schedule = Schedule::Lbc;
    return run_training(c, shards, g, validation);
}

TrainReport train_cbl(const TrainConfig& cfg, const std::vector<Shard>& shards,
                      const GraphTopology& g, const Shard& validation) {
    TrainConfig c = cfg;
    c.schedule = Schedule::Cbl;
    return run_training(c, shards, g, validation);
}

TrainReport train_centralized(const TrainConfig& cfg, const Shard& full, const Shard& validation) {
    TrainConfig c = cfg;
    c.schedule = Schedule::Centralized;
    const GraphTopology g = build_topology(1, {});
    return run_training(c, {full}, g, validation);
}

}  // namespace dlstm
