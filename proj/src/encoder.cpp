#include "graphlm/encoder.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "graphlm/errors.hpp"

namespace graphlm {

GnnParams GnnParams::init(int num_layers, int feat_dim, int gnn_dim, Rng& rng) {
    if (num_layers < 1) throw ConfigError("gnn: num_layers must be >= 1");
    if (feat_dim < 1 || gnn_dim < 1) throw ConfigError("gnn: dims must be >= 1");
    GnnParams p;
    int in = feat_dim;
    for (int l = 0; l < num_layers; ++l) {
        Matrix w(gnn_dim, 2 * in);
        double s = 1.0 / std::sqrt(2.0 * in);
        for (auto& x : w.a) x = rng.normal() * s;
        p.layers.push_back(std::move(w));
        in = gnn_dim;
    }
    return p;
}

int GnnParams::output_dim() const {
    if (layers.empty()) throw ConfigError("gnn: no layers");
    return layers.back().rows;
}

void GnnParams::validate(int feat_dim) const {
    if (layers.empty()) throw ConfigError("gnn: no layers");
    int in = feat_dim;
    for (size_t l = 0; l < layers.size(); ++l) {
        if (layers[l].cols != 2 * in)
            throw ConfigError("gnn: layer " + std::to_string(l) + " expects input dim " +
                              std::to_string(layers[l].cols / 2) + ", got " + std::to_string(in));
        in = layers[l].rows;
    }
}

Var gnn_forward(Tape& tape, const NeighborhoodSubgraph& sub,
                const std::vector<Var>& layer_weights) {
    const int n = sub.size();
    if (n == 0) throw DataError("gnn_forward: empty subgraph");
    if (layer_weights.empty()) throw ConfigError("gnn_forward: no layers");

    const int feat_dim = static_cast<int>(sub.local_features[0].size());
    Matrix feats(n, feat_dim);
    for (int i = 0; i < n; ++i) {
        if (static_cast<int>(sub.local_features[static_cast<size_t>(i)].size()) != feat_dim)
            throw ConfigError("gnn_forward: inconsistent feature dims");
        for (int c = 0; c < feat_dim; ++c)
            feats(i, c) = sub.local_features[static_cast<size_t>(i)][static_cast<size_t>(c)];
    }

    // Fixed mean-aggregation operator over the local adjacency.
    Matrix mean_op(n, n);
    for (int i = 0; i < n; ++i) {
        const auto& nb = sub.local_adjacency[static_cast<size_t>(i)];
        if (nb.empty()) continue;
        double w = 1.0 / static_cast<double>(nb.size());
        for (int j : nb) mean_op(i, j) = w;
    }

    Var agg_op = tape.leaf(std::move(mean_op), false);
    Var h = tape.leaf(std::move(feats), false);
    for (Var w : layer_weights) {
        Var agg = tape.matmul(agg_op, h);
        Var cat = tape.concat_cols(h, agg);
        h = tape.relu(tape.matmul_nt(cat, w));
    }
    return h;
}

Var attach_hop_encodings(Tape& tape, Var embeddings, const NeighborhoodSubgraph& sub,
                         Var hop_table) {
    const int rows = tape.value(hop_table).rows;
    std::vector<int> idx;
    idx.reserve(sub.hop_of.size());
    for (int h : sub.hop_of) {
        if (h < 0 || h >= rows)
            throw std::logic_error("attach_hop_encodings: hop " + std::to_string(h) +
                                   " outside table of " + std::to_string(rows) + " rows");
        idx.push_back(h);
    }
    if (static_cast<int>(idx.size()) != tape.value(embeddings).rows)
        throw ConfigError("attach_hop_encodings: member count mismatch");
    return tape.concat_cols(embeddings, tape.gather_rows(hop_table, std::move(idx)));
}

HopTable HopTable::init(int max_hops, int hop_dim, Rng& rng) {
    if (max_hops < 0 || hop_dim < 1) throw ConfigError("hop table: bad dims");
    HopTable t;
    for (;;) {
        t.table = Matrix(max_hops + 1, hop_dim);
        for (auto& x : t.table.a) x = rng.uniform(-0.1, 0.1);
        bool distinct = true;
        for (int i = 0; i < t.table.rows && distinct; ++i)
            for (int j = i + 1; j < t.table.rows && distinct; ++j) {
                bool same = true;
                for (int c = 0; c < hop_dim; ++c)
                    if (t.table(i, c) != t.table(j, c)) {
                        same = false;
                        break;
                    }
                if (same) distinct = false;
            }
        if (distinct) return t;
    }
}

}  // namespace graphlm
