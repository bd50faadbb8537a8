#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace dlstm {

// Packed parameter vector (row-major field order, see lstm.hpp).
using FlatVector = std::vector<double>;

struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;  // row-major

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

// y = M x
std::vector<double> matvec(const Matrix& m, const std::vector<double>& x);

double sigmoid(double x);
double tanh_act(double x);

std::vector<double> softmax(const std::vector<double>& v);

// Central differences, (f(x + eps e_k) - f(x - eps e_k)) / (2 eps).
FlatVector finite_difference_gradient(const std::function<double(const FlatVector&)>& loss_fn,
                                      const FlatVector& theta, double eps = 1e-5);

// |a - b| / max(floor, |a| + |b|)
double relative_error(double a, double b, double floor = 1e-8);

}  // namespace dlstm
