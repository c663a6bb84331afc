#pragma once
#include <map>
#include <set>
#include <string>
#include <vector>

#include "graphlm/encoder.hpp"
#include "graphlm/gate.hpp"
#include "graphlm/lm.hpp"
#include "graphlm/projector.hpp"
#include "graphlm/tag.hpp"

namespace graphlm {

struct ModelConfig {
    int feat_dim = 64;
    int gnn_layers = 3;
    int gnn_dim = 32;
    int hop_dim = 4;
    int max_hops = 2;
    int max_neighbors = 100;
    int gate_out_dim = 0;  // 0 -> same as gate input dim
    int bag_dim = 16384;
    bool gate_enabled = true;        // ablation: bypass the gate entirely
    bool zero_hop_encodings = false;  // ablation: fixed all-zero hop table
    uint64_t feature_seed = 0;
    LmConfig lm;

    int gate_in_dim() const { return gnn_dim + hop_dim; }
    int gate_out() const {
        if (!gate_enabled) return gate_in_dim();
        return gate_out_dim > 0 ? gate_out_dim : gate_in_dim();
    }
    void validate() const;
    std::string to_json() const;
    static ModelConfig from_json(const std::string& text);
};

enum class Stage { kPretrain, kAdapt };

// Every non-LM parameter tensor, with the explicit frozen/tunable partition
// computed per stage. The LM is frozen in all stages and lives separately.
struct Model {
    ModelConfig cfg;
    GnnParams gnn;
    HopTable hops;
    GateParams gate;
    TaskTextEncoderParams alpha;
    ProjectorParams proj;

    static Model init(const ModelConfig& cfg, uint64_t seed);
    void validate() const;

    std::vector<std::pair<std::string, Matrix*>> named_tensors();
    std::vector<std::pair<std::string, const Matrix*>> named_tensors() const;
    // Digest over tensors whose name starts with the prefix ("" = all).
    uint64_t digest(const std::string& prefix = "") const;
};

// Tensor names updated by the optimizer in the given stage.
// include_hop_encodings only affects the adaptation stage.
std::vector<std::string> trainable_names(const ModelConfig& cfg, Stage stage,
                                         bool include_hop_encodings);

// Model tensors bound onto a tape.
struct ModelVars {
    std::vector<Var> gnn_layers;
    Var hop_table, w_inv, m_inv, w_rel, m_rel, w_agg, alpha_proj, proj_w, proj_b;
    std::map<std::string, Var> by_name;
};

ModelVars bind_model(Tape& tape, const Model& model, const std::set<std::string>& trainable);

// Node-token pipeline over one subgraph: encoder, hop concat, gate (unless
// bypassed), projector. m_rel is passed explicitly: pre-training derives it
// from the task-text encoder, adaptation binds it as a free tensor.
Var encode_subgraph(Tape& tape, const NeighborhoodSubgraph& sub, const ModelConfig& cfg,
                    const ModelVars& vars, Var m_rel);

}  // namespace graphlm
