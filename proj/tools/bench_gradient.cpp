// Compares the serial batch-gradient kernel against the OpenMP one and
// checks they agree bit for bit.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "dlstm/lstm.hpp"

namespace {

std::vector<dlstm::SequenceSample> random_batch(std::size_t n, std::size_t t_len, std::size_t d,
                                                std::size_t e, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    std::vector<dlstm::SequenceSample> batch(n);
    for (auto& s : batch) {
        s.steps.assign(t_len, std::vector<double>(d));
        for (auto& x : s.steps)
            for (double& v : x) v = dist(rng);
        s.readout_context.resize(e);
        for (double& v : s.readout_context) v = dist(rng);
        s.target = dist(rng);
    }
    return batch;
}

double time_of(const std::function<void()>& fn, int reps) {
    const auto t0 = std::chrono::steady_clock::now();
    for (int r = 0; r < reps; ++r) fn();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() /
           static_cast<double>(reps);
}

}  // namespace

int main() {
    const std::size_t d = 3, e = 2, t_len = 9, h = 16;
    const int reps = 5;
#ifdef _OPENMP
    std::printf("OpenMP threads: %d\n", omp_get_max_threads());
#else
    std::printf("OpenMP: disabled at build time\n");
#endif
    std::printf("%8s %12s %12s %8s %10s\n", "batch", "serial[s]", "parallel[s]", "speedup",
                "identical");
    for (std::size_t n : {64, 256, 1024, 4096}) {
        const auto batch = random_batch(n, t_len, d, e, 99);
        const auto params = dlstm::init_params(d, h, e, 7);
        dlstm::FlatVector gs, gp;
        const double ts = time_of([&] { gs = dlstm::backward_bptt(params, batch); }, reps);
        const double tp = time_of([&] { gp = dlstm::backward_bptt_parallel(params, batch); }, reps);
        std::printf("%8zu %12.6f %12.6f %8.2f %10s\n", n, ts, tp, ts / tp,
                    gs == gp ? "yes" : "NO");
    }
    return 0;
}
