#include "dlstm/metrics.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dlstm {

EvalReport evaluate(std::span<const double> actual, std::span<const double> forecast) {
    if (actual.size() != forecast.size()) {
        throw std::invalid_argument("evaluate: length mismatch");
    }
    if (actual.empty()) throw std::invalid_argument("evaluate: empty input");

    double abs_sum = 0.0, ape_sum = 0.0, sq_sum = 0.0, actual_sq_sum = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        if (actual[i] == 0.0) {
            throw std::invalid_argument("evaluate: zero actual value at index " + std::to_string(i));
        }
        const double err = actual[i] - forecast[i];
        abs_sum += std::abs(err);
        ape_sum += std::abs(err) / std::abs(actual[i]);
        sq_sum += err * err;
        actual_sq_sum += actual[i] * actual[i];
    }
    const double inv_n = 1.0 / static_cast<double>(actual.size());
    EvalReport r;
    r.mape = ape_sum * inv_n;
    r.mae = abs_sum * inv_n;
    r.mse_plain = sq_sum * inv_n;
    r.mse_relative = sq_sum / actual_sq_sum;
    r.n = actual.size();
    return r;
}

}  // namespace dlstm
