#include "dlstm/graph.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <random>
#include <stdexcept>

namespace dlstm {

std::vector<std::size_t> GraphTopology::degrees() const {
    std::vector<std::size_t> deg(n_agents, 0);
    for (const auto& [i, j] : edges) {
        ++deg[i];
        ++deg[j];
    }
    return deg;
}

Matrix GraphTopology::adjacency() const {
    Matrix a(n_agents, n_agents);
    for (const auto& [i, j] : edges) {
        a(i, j) = 1.0;
        a(j, i) = 1.0;
    }
    return a;
}

GraphTopology build_topology(std::size_t n_agents,
                             const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
    if (n_agents == 0) throw std::invalid_argument("build_topology: n_agents must be >= 1");
    GraphTopology g;
    g.n_agents = n_agents;
    g.edges.reserve(edges.size());
    for (auto [i, j] : edges) {
        if (i >= n_agents || j >= n_agents) {
            throw std::invalid_argument("build_topology: edge index out of range");
        }
        if (i == j) throw std::invalid_argument("build_topology: self-loop not allowed");
        if (i > j) std::swap(i, j);
        g.edges.emplace_back(i, j);
    }
    std::sort(g.edges.begin(), g.edges.end());
    g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
    return g;
}

GraphTopology named_topology(const std::string& name, std::size_t n_agents) {
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    if (name == "ring") {
        if (n_agents >= 2) {
            for (std::size_t i = 0; i + 1 < n_agents; ++i) edges.emplace_back(i, i + 1);
            if (n_agents > 2) edges.emplace_back(0, n_agents - 1);
        }
    } else if (name == "path") {
        for (std::size_t i = 0; i + 1 < n_agents; ++i) edges.emplace_back(i, i + 1);
    } else if (name == "complete") {
        for (std::size_t i = 0; i < n_agents; ++i)
            for (std::size_t j = i + 1; j < n_agents; ++j) edges.emplace_back(i, j);
    } else if (name == "star") {
        for (std::size_t i = 1; i < n_agents; ++i) edges.emplace_back(0, i);
    } else {
        throw std::invalid_argument("named_topology: unknown name '" + name + "'");
    }
    return build_topology(n_agents, edges);
}

Matrix laplacian(const GraphTopology& g) {
    Matrix l(g.n_agents, g.n_agents);
    for (const auto& [i, j] : g.edges) {
        l(i, j) = -1.0;
        l(j, i) = -1.0;
        l(i, i) += 1.0;
        l(j, j) += 1.0;
    }
    return l;
}

bool is_connected(const GraphTopology& g) {
    if (g.n_agents == 1) return true;
    std::vector<std::vector<std::size_t>> adj(g.n_agents);
    for (const auto& [i, j] : g.edges) {
        adj[i].push_back(j);
        adj[j].push_back(i);
    }
    std::vector<bool> seen(g.n_agents, false);
    std::queue<std::size_t> q;
    q.push(0);
    seen[0] = true;
    std::size_t count = 1;
    while (!q.empty()) {
        const std::size_t v = q.front();
        q.pop();
        for (std::size_t w : adj[v]) {
            if (!seen[w]) {
                seen[w] = true;
                ++count;
                q.push(w);
            }
        }
    }
    return count == g.n_agents;
}

MixingMatrix metropolis_weights(const GraphTopology& g) {
    if (!is_connected(g)) {
        throw std::invalid_argument("metropolis_weights: graph must be connected");
    }
    const auto deg = g.degrees();
    Matrix w(g.n_agents, g.n_agents);
    for (const auto& [i, j] : g.edges) {
        const double wij = 1.0 / (1.0 + static_cast<double>(std::max(deg[i], deg[j])));
        w(i, j) = wij;
        w(j, i) = wij;
    }
    for (std::size_t i = 0; i < g.n_agents; ++i) {
        double off = 0.0;
        for (std::size_t j = 0; j < g.n_agents; ++j)
            if (j != i) off += w(i, j);
        w(i, i) = 1.0 - off;
    }
    return MixingMatrix{w};
}

double contraction_factor(const MixingMatrix& m) {
    const std::size_t n = m.size();
    if (n == 1) return 0.0;

    std::mt19937_64 rng(12345);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<double> v(n);
    for (double& e : v) e = dist(rng);

    auto deflate = [n](std::vector<double>& x) {
        double mean = 0.0;
        for (double e : x) mean += e;
        mean /= static_cast<double>(n);
        for (double& e : x) e -= mean;
    };
    auto norm = [](const std::vector<double>& x) {
        double s = 0.0;
        for (double e : x) s += e * e;
        return std::sqrt(s);
    };

    deflate(v);
    double nv = norm(v);
    if (nv == 0.0) return 0.0;
    for (double& e : v) e /= nv;

    const double tol = 1e-10;
    const int max_iters = 10000;
    double lambda = 0.0;
    for (int it = 0; it < max_iters; ++it) {
        std::vector<double> mv = matvec(m.weights, v);
        deflate(mv);
        const double nmv = norm(mv);
        if (nmv < 1e-300) return 0.0;  // deflated subspace annihilated (rank-1 mixing)
        const double next = nmv;
        for (std::size_t i = 0; i < n; ++i) v[i] = mv[i] / nmv;
        if (it > 0 && std::abs(next - lambda) < tol) return next;
        lambda = next;
    }
    throw std::runtime_error("contraction_factor: power iteration did not converge in 10000 iterations");
}

}  // namespace dlstm
