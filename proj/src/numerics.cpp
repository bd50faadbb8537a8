#include "dlstm/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace dlstm {

std::vector<double> matvec(const Matrix& m, const std::vector<double>& x) {
    if (x.size() != m.cols) {
        throw std::invalid_argument("matvec: dimension mismatch (" + std::to_string(m.cols) +
                                    " cols vs " + std::to_string(x.size()) + " entries)");
    }
    std::vector<double> y(m.rows, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i) {
        double acc = 0.0;
        const double* row = m.data.data() + i * m.cols;
        for (std::size_t j = 0; j < m.cols; ++j) acc += row[j] * x[j];
        y[i] = acc;
    }
    return y;
}

double sigmoid(double x) {
    // exp of the negative magnitude so large |x| never overflows
    if (x >= 0.0) {
        const double z = std::exp(-x);
        return 1.0 / (1.0 + z);
    }
    const double z = std::exp(x);
    return z / (1.0 + z);
}

double tanh_act(double x) { return std::tanh(x); }

std::vector<double> softmax(const std::vector<double>& v) {
    if (v.empty()) throw std::invalid_argument("softmax: empty vector");
    const double m = *std::max_element(v.begin(), v.end());
    std::vector<double> out(v.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = std::exp(v[i] - m);
        sum += out[i];
    }
    for (double& e : out) e /= sum;
    return out;
}

FlatVector finite_difference_gradient(const std::function<double(const FlatVector&)>& loss_fn,
                                      const FlatVector& theta, double eps) {
    if (eps <= 0.0) throw std::invalid_argument("finite_difference_gradient: eps must be > 0");
    FlatVector grad(theta.size(), 0.0);
    FlatVector probe = theta;
    for (std::size_t k = 0; k < theta.size(); ++k) {
        probe[k] = theta[k] + eps;
        const double up = loss_fn(probe);
        probe[k] = theta[k] - eps;
        const double down = loss_fn(probe);
        probe[k] = theta[k];
        if (!std::isfinite(up) || !std::isfinite(down)) {
            throw std::runtime_error("finite_difference_gradient: non-finite loss at coordinate " +
                                     std::to_string(k));
        }
        grad[k] = (up - down) / (2.0 * eps);
    }
    return grad;
}

double relative_error(double a, double b, double floor) {
    return std::abs(a - b) / std::max(floor, std::abs(a) + std::abs(b));
}

}  // namespace dlstm
