#include "dlstm/lstm.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dlstm {

namespace {

void check_dims(const LstmParams& p) {
    const std::size_t h = p.hidden_size;
    const std::size_t cols = p.hidden_size + p.input_size;
    const bool ok = p.w_f.rows == h && p.w_f.cols == cols && p.w_j.rows == h && p.w_j.cols == cols &&
                    p.w_c.rows == h && p.w_c.cols == cols && p.w_o.rows == h && p.w_o.cols == cols &&
                    p.b_f.size() == h && p.b_j.size() == h && p.b_c.size() == h &&
                    p.b_o.size() == h && p.w_v.size() == h + p.readout_extras;
    if (!ok) throw std::invalid_argument("LstmParams: inconsistent dimensions");
}

// Gradient of one sample's squared error, accumulated into grad (pack order).
void accumulate_sample_gradient(const LstmParams& p, const SequenceSample& s, FlatVector& grad) {
    const std::size_t h = p.hidden_size;
    const std::size_t d = p.input_size;
    const std::size_t e = p.readout_extras;
    const std::size_t concat = h + d;
    const std::size_t t_len = s.steps.size();
    if (t_len == 0) throw std::invalid_argument("backward_bptt: empty sequence");
    if (s.readout_context.size() != e) throw std::invalid_argument("backward_bptt: context size mismatch");

    std::vector<GateCache> caches(t_len);
    CellState state{std::vector<double>(h, 0.0), std::vector<double>(h, 0.0)};
    for (std::size_t t = 0; t < t_len; ++t) {
        state = cell_forward(p, state, s.steps[t], &caches[t]);
    }

    double y = p.b_v;
    for (std::size_t k = 0; k < h; ++k) y += p.w_v[k] * state.h[k];
    for (std::size_t k = 0; k < e; ++k) y += p.w_v[h + k] * s.readout_context[k];

    const double dy = 2.0 * (y - s.target);
    if (!std::isfinite(dy)) throw std::runtime_error("backward_bptt: non-finite readout");

    // Offsets into the packed layout.
    const std::size_t gate = h * concat + h;  // one W + one b
    const std::size_t off_wf = 0, off_bf = h * concat;
    const std::size_t off_wj = gate, off_bj = gate + h * concat;
    const std::size_t off_wc = 2 * gate, off_bc = 2 * gate + h * concat;
    const std::size_t off_wo = 3 * gate, off_bo = 3 * gate + h * concat;
    const std::size_t off_wv = 4 * gate;
    const std::size_t off_bv = 4 * gate + h + e;

    for (std::size_t k = 0; k < h; ++k) grad[off_wv + k] += dy * state.h[k];
    for (std::size_t k = 0; k < e; ++k) grad[off_wv + h + k] += dy * s.readout_context[k];
    grad[off_bv] += dy;

    std::vector<double> dh(h), dc(h, 0.0);
    for (std::size_t k = 0; k < h; ++k) dh[k] = dy * p.w_v[k];

    std::vector<double> dpre_f(h), dpre_j(h), dpre_c(h), dpre_o(h), dconcat(concat);
    for (std::size_t t = t_len; t-- > 0;) {
        const GateCache& cc = caches[t];
        for (std::size_t k = 0; k < h; ++k) {
            const double do_k = dh[k] * cc.tanh_c[k];
            dpre_o[k] = do_k * cc.o[k] * (1.0 - cc.o[k]);
            dc[k] += dh[k] * cc.o[k] * (1.0 - cc.tanh_c[k] * cc.tanh_c[k]);

            const double df = dc[k] * cc.c_prev[k];
            const double dj = dc[k] * cc.c_hat[k];
            const double dchat = dc[k] * cc.j[k];
            dpre_f[k] = df * cc.f[k] * (1.0 - cc.f[k]);
            dpre_j[k] = dj * cc.j[k] * (1.0 - cc.j[k]);
            dpre_c[k] = dchat * (1.0 - cc.c_hat[k] * cc.c_hat[k]);
        }

        std::fill(dconcat.begin(), dconcat.end(), 0.0);
        for (std::size_t k = 0; k < h; ++k) {
            const double* rf = p.w_f.data.data() + k * concat;
            const double* rj = p.w_j.data.data() + k * concat;
            const double* rc = p.w_c.data.data() + k * concat;
            const double* ro = p.w_o.data.data() + k * concat;
            for (std::size_t m = 0; m < concat; ++m) {
                dconcat[m] += dpre_f[k] * rf[m] + dpre_j[k] * rj[m] + dpre_c[k] * rc[m] +
                              dpre_o[k] * ro[m];
            }
        }

        for (std::size_t k = 0; k < h; ++k) {
            double* gf = grad.data() + off_wf + k * concat;
            double* gj = grad.data() + off_wj + k * concat;
            double* gc = grad.data() + off_wc + k * concat;
            double* go = grad.data() + off_wo + k * concat;
            for (std::size_t m = 0; m < h; ++m) {
                const double in = cc.h_prev[m];
                gf[m] += dpre_f[k] * in;
                gj[m] += dpre_j[k] * in;
                gc[m] += dpre_c[k] * in;
                go[m] += dpre_o[k] * in;
            }
            for (std::size_t m = 0; m < d; ++m) {
                const double in = cc.x[m];
                gf[h + m] += dpre_f[k] * in;
                gj[h + m] += dpre_j[k] * in;
                gc[h + m] += dpre_c[k] * in;
                go[h + m] += dpre_o[k] * in;
            }
            grad[off_bf + k] += dpre_f[k];
            grad[off_bj + k] += dpre_j[k];
            grad[off_bc + k] += dpre_c[k];
            grad[off_bo + k] += dpre_o[k];
        }

        for (std::size_t k = 0; k < h; ++k) {
            dh[k] = dconcat[k];
            dc[k] *= caches[t].f[k];
        }
    }
}

}  // namespace

std::size_t LstmParams::flat_size() const {
    const std::size_t concat = hidden_size + input_size;
    return 4 * (hidden_size * concat + hidden_size) + (hidden_size + readout_extras) + 1;
}

LstmParams init_params(std::size_t input_size, std::size_t hidden_size,
                       std::size_t readout_extras, std::uint64_t seed) {
    if (input_size == 0 || hidden_size == 0) {
        throw std::invalid_argument("init_params: input_size and hidden_size must be >= 1");
    }
    LstmParams p;
    p.input_size = input_size;
    p.hidden_size = hidden_size;
    p.readout_extras = readout_extras;
    const std::size_t concat = hidden_size + input_size;

    std::mt19937_64 rng(seed);
    const double bound = 1.0 / std::sqrt(static_cast<double>(hidden_size));
    std::uniform_real_distribution<double> dist(-bound, bound);

    auto fill_matrix = [&](Matrix& m) {
        m = Matrix(hidden_size, concat);
        for (double& e : m.data) e = dist(rng);
    };
    fill_matrix(p.w_f);
    fill_matrix(p.w_j);
    fill_matrix(p.w_c);
    fill_matrix(p.w_o);
    p.b_f.assign(hidden_size, 1.0);  // forget gate starts open
    p.b_j.assign(hidden_size, 0.0);
    p.b_c.assign(hidden_size, 0.0);
    p.b_o.assign(hidden_size, 0.0);
    p.w_v.resize(hidden_size + readout_extras);
    for (double& e : p.w_v) e = dist(rng);
    p.b_v = 0.0;
    return p;
}

CellState cell_forward(const LstmParams& p, const CellState& prev, const std::vector<double>& x,
                       GateCache* cache) {
    check_dims(p);
    const std::size_t h = p.hidden_size;
    if (x.size() != p.input_size || prev.h.size() != h || prev.c.size() != h) {
        throw std::invalid_argument("cell_forward: dimension mismatch");
    }
    std::vector<double> concat(h + p.input_size);
    std::copy(prev.h.begin(), prev.h.end(), concat.begin());
    std::copy(x.begin(), x.end(), concat.begin() + static_cast<std::ptrdiff_t>(h));

    std::vector<double> f = matvec(p.w_f, concat);
    std::vector<double> j = matvec(p.w_j, concat);
    std::vector<double> c_hat = matvec(p.w_c, concat);
    std::vector<double> o = matvec(p.w_o, concat);

    CellState next{std::vector<double>(h), std::vector<double>(h)};
    std::vector<double> tanh_c(h);
    for (std::size_t k = 0; k < h; ++k) {
        f[k] = sigmoid(f[k] + p.b_f[k]);
        j[k] = sigmoid(j[k] + p.b_j[k]);
        c_hat[k] = tanh_act(c_hat[k] + p.b_c[k]);
        o[k] = sigmoid(o[k] + p.b_o[k]);
        next.c[k] = f[k] * prev.c[k] + j[k] * c_hat[k];
        tanh_c[k] = tanh_act(next.c[k]);
        next.h[k] = o[k] * tanh_c[k];
    }

    if (cache != nullptr) {
        cache->x = x;
        cache->h_prev = prev.h;
        cache->c_prev = prev.c;
        cache->f = std::move(f);
        cache->j = std::move(j);
        cache->c_hat = std::move(c_hat);
        cache->o = std::move(o);
        cache->c = next.c;
        cache->tanh_c = std::move(tanh_c);
    }
    return next;
}

double predict(const LstmParams& p, const SequenceSample& s) {
    if (s.steps.empty()) throw std::invalid_argument("predict: empty sequence");
    if (s.readout_context.size() != p.readout_extras) {
        throw std::invalid_argument("predict: context size mismatch");
    }
    const std::size_t h = p.hidden_size;
    CellState state{std::vector<double>(h, 0.0), std::vector<double>(h, 0.0)};
    for (const auto& x : s.steps) state = cell_forward(p, state, x);

    double y = p.b_v;
    for (std::size_t k = 0; k < h; ++k) y += p.w_v[k] * state.h[k];
    for (std::size_t k = 0; k < p.readout_extras; ++k) y += p.w_v[h + k] * s.readout_context[k];
    return y;
}

double empirical_loss(const LstmParams& p, std::span<const SequenceSample> batch) {
    if (batch.empty()) throw std::invalid_argument("empirical_loss: empty batch");
    double sum = 0.0;
    for (const SequenceSample& s : batch) {
        const double r = predict(p, s) - s.target;
        sum += r * r;
    }
    return sum / static_cast<double>(batch.size());
}

FlatVector backward_bptt(const LstmParams& p, std::span<const SequenceSample> batch) {
    if (batch.empty()) throw std::invalid_argument("backward_bptt: empty batch");
    check_dims(p);
    FlatVector grad(p.flat_size(), 0.0);
    FlatVector sample_grad(p.flat_size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        std::fill(sample_grad.begin(), sample_grad.end(), 0.0);
        try {
            accumulate_sample_gradient(p, batch[i], sample_grad);
        } catch (const std::runtime_error& ex) {
            throw std::runtime_error(std::string(ex.what()) + " (sample " + std::to_string(i) + ")");
        }
        for (std::size_t k = 0; k < grad.size(); ++k) grad[k] += sample_grad[k];
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    for (double& g : grad) g *= inv;
    return grad;
}

FlatVector backward_bptt_parallel(const LstmParams& p, std::span<const SequenceSample> batch) {
    if (batch.empty()) throw std::invalid_argument("backward_bptt: empty batch");
    check_dims(p);
#ifndef _OPENMP
    return backward_bptt(p, batch);
#else
    const std::size_t n = batch.size();
    const std::size_t dim = p.flat_size();
    // One slot per sample, summed in sample order afterwards.
    std::vector<FlatVector> per_sample(n);
    std::exception_ptr err;
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
        try {
            per_sample[static_cast<std::size_t>(i)].assign(dim, 0.0);
            accumulate_sample_gradient(p, batch[static_cast<std::size_t>(i)],
                                       per_sample[static_cast<std::size_t>(i)]);
        } catch (...) {
#pragma omp critical
            if (!err) err = std::current_exception();
        }
    }
    if (err) std::rethrow_exception(err);

    FlatVector grad(dim, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const FlatVector& g = per_sample[i];
        for (std::size_t k = 0; k < dim; ++k) grad[k] += g[k];
    }
    const double inv = 1.0 / static_cast<double>(n);
    for (double& g : grad) g *= inv;
    return grad;
#endif
}

FlatVector pack_params(const LstmParams& p) {
    check_dims(p);
    FlatVector flat;
    flat.reserve(p.flat_size());
    auto append = [&flat](const std::vector<double>& v) {
        flat.insert(flat.end(), v.begin(), v.end());
    };
    append(p.w_f.data);
    append(p.b_f);
    append(p.w_j.data);
    append(p.b_j);
    append(p.w_c.data);
    append(p.b_c);
    append(p.w_o.data);
    append(p.b_o);
    append(p.w_v);
    flat.push_back(p.b_v);
    return flat;
}

LstmParams unpack_params(const FlatVector& flat, std::size_t input_size, std::size_t hidden_size,
                         std::size_t readout_extras) {
    LstmParams p;
    p.input_size = input_size;
    p.hidden_size = hidden_size;
    p.readout_extras = readout_extras;
    if (flat.size() != p.flat_size()) {
        throw std::invalid_argument("unpack_params: expected length " +
                                    std::to_string(p.flat_size()) + ", got " +
                                    std::to_string(flat.size()));
    }
    const std::size_t concat = hidden_size + input_size;
    std::size_t pos = 0;
    auto take_matrix = [&](Matrix& m) {
        m = Matrix(hidden_size, concat);
        std::copy(flat.begin() + static_cast<std::ptrdiff_t>(pos),
                  flat.begin() + static_cast<std::ptrdiff_t>(pos + hidden_size * concat),
                  m.data.begin());
        pos += hidden_size * concat;
    };
    auto take_vector = [&](std::vector<double>& v, std::size_t len) {
        v.assign(flat.begin() + static_cast<std::ptrdiff_t>(pos),
                 flat.begin() + static_cast<std::ptrdiff_t>(pos + len));
        pos += len;
    };
    take_matrix(p.w_f);
    take_vector(p.b_f, hidden_size);
    take_matrix(p.w_j);
    take_vector(p.b_j, hidden_size);
    take_matrix(p.w_c);
    take_vector(p.b_c, hidden_size);
    take_matrix(p.w_o);
    take_vector(p.b_o, hidden_size);
    take_vector(p.w_v, hidden_size + readout_extras);
    p.b_v = flat[pos];
    return p;
}

}  // namespace dlstm
