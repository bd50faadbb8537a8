#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "dlstm/numerics.hpp"

namespace dlstm {

// Undirected communication graph among agents. Edges are normalized
// (i < j, sorted, deduplicated) at construction.
struct GraphTopology {
    std::size_t n_agents = 0;
    std::vector<std::pair<std::size_t, std::size_t>> edges;

    std::vector<std::size_t> degrees() const;
    Matrix adjacency() const;
};

GraphTopology build_topology(std::size_t n_agents,
                             const std::vector<std::pair<std::size_t, std::size_t>>& edges);

// name in {ring, path, complete, star}; star center is agent 0.
GraphTopology named_topology(const std::string& name, std::size_t n_agents);

// L = D - A; rows and columns sum to zero.
Matrix laplacian(const GraphTopology& g);

bool is_connected(const GraphTopology& g);

// Doubly stochastic, symmetric, supported on the graph plus the diagonal.
struct MixingMatrix {
    Matrix weights;
    std::size_t size() const { return weights.rows; }
};

// w_ij = 1 / (1 + max(deg_i, deg_j)) on edges, diagonal fills each row to 1.
// Requires a connected graph.
MixingMatrix metropolis_weights(const GraphTopology& g);

// Second-largest eigenvalue magnitude via power iteration on the subspace
// orthogonal to the all-ones vector. Governs consensus decay speed.
double contraction_factor(const MixingMatrix& m);

}  // namespace dlstm
