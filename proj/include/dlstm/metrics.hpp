#pragma once

#include <cstddef>
#include <span>

namespace dlstm {

struct EvalReport {
    double mape = 0.0;          // fraction, e.g. 0.0138
    double mse_plain = 0.0;     // (1/N) sum (y - yhat)^2
    double mse_relative = 0.0;  // sum (y - yhat)^2 / sum y^2
    double mae = 0.0;
    std::size_t n = 0;
};

// Inputs are raw (denormalized) units; MAPE requires every actual != 0.
EvalReport evaluate(std::span<const double> actual, std::span<const double> forecast);

}  // namespace dlstm
