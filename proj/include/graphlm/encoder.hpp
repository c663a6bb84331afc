#pragma once
#include <vector>

#include "graphlm/autodiff.hpp"
#include "graphlm/matrix.hpp"
#include "graphlm/rng.hpp"
#include "graphlm/tag.hpp"

namespace graphlm {

// Message-passing encoder: per layer, each member's embedding is concatenated
// with the mean of its in-subgraph neighbors' embeddings and passed through a
// linear map and ReLU. Members with no neighbors aggregate the zero vector.
struct GnnParams {
    std::vector<Matrix> layers;  // layer l weight, [out_dim x 2*in_dim]

    static GnnParams init(int num_layers, int feat_dim, int gnn_dim, Rng& rng);
    int output_dim() const;
    void validate(int feat_dim) const;
};

// Learnable per-hop vectors appended to encoder outputs. Rows are drawn
// uniform(-0.1, 0.1) and re-drawn until pairwise distinct.
struct HopTable {
    Matrix table;  // (max_hops + 1) x hop_dim

    static HopTable init(int max_hops, int hop_dim, Rng& rng);
    int max_hops() const { return table.rows - 1; }
    int hop_dim() const { return table.cols; }
};

// Returns [members x gnn_dim] embeddings. layer_weights are tape leaves of
// the GnnParams matrices, in layer order.
Var gnn_forward(Tape& tape, const NeighborhoodSubgraph& sub,
                const std::vector<Var>& layer_weights);

// Concat the hop vector of each member: [members x (gnn_dim + hop_dim)].
Var attach_hop_encodings(Tape& tape, Var embeddings, const NeighborhoodSubgraph& sub,
                         Var hop_table);

}  // namespace graphlm
