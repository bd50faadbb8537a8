#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dlstm/numerics.hpp"

namespace dlstm {

// Full parameter set of a single-layer LSTM forecaster with an affine
// scalar readout y = W_v . [h_T ; context] + b_v.
struct LstmParams {
    std::size_t input_size = 0;     // D
    std::size_t hidden_size = 0;    // H
    std::size_t readout_extras = 0; // E, exogenous features fed to the readout

    Matrix w_f, w_j, w_c, w_o;               // H x (H + D)
    std::vector<double> b_f, b_j, b_c, b_o;  // H
    std::vector<double> w_v;                 // H + E
    double b_v = 0.0;

    std::size_t flat_size() const;
};

struct CellState {
    std::vector<double> h;
    std::vector<double> c;
};

// Activations retained by cell_forward for backpropagation through time.
struct GateCache {
    std::vector<double> x;
    std::vector<double> h_prev, c_prev;
    std::vector<double> f, j, c_hat, o;
    std::vector<double> c, tanh_c;
};

// One Table-style training instance: T input vectors, readout-time
// exogenous context, and the scalar target.
struct SequenceSample {
    std::vector<std::vector<double>> steps;  // T x D
    std::vector<double> readout_context;     // E
    double target = 0.0;
};

// Weights uniform in [-1/sqrt(H), 1/sqrt(H)], biases zero except b_f = 1.
LstmParams init_params(std::size_t input_size, std::size_t hidden_size,
                       std::size_t readout_extras, std::uint64_t seed);

CellState cell_forward(const LstmParams& p, const CellState& prev,
                       const std::vector<double>& x, GateCache* cache = nullptr);

double predict(const LstmParams& p, const SequenceSample& s);

// Mean squared error over the batch.
double empirical_loss(const LstmParams& p, std::span<const SequenceSample> batch);

// Exact gradient of empirical_loss in pack_params order.
FlatVector backward_bptt(const LstmParams& p, std::span<const SequenceSample> batch);

// OpenMP variant; per-sample gradients are reduced in sample order, so the
// result is bit-identical to backward_bptt for any thread count.
FlatVector backward_bptt_parallel(const LstmParams& p, std::span<const SequenceSample> batch);

// Field order: W_f, b_f, W_j, b_j, W_C, b_C, W_o, b_o, W_v, b_v (row-major).
FlatVector pack_params(const LstmParams& p);
LstmParams unpack_params(const FlatVector& flat, std::size_t input_size,
                         std::size_t hidden_size, std::size_t readout_extras);

}  // namespace dlstm
