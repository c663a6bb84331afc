#include "graphlm/model.hpp"

#include "graphlm/digest.hpp"
#include "graphlm/errors.hpp"
#include "json.hpp"

namespace graphlm {

void ModelConfig::validate() const {
    if (feat_dim < 1 || gnn_layers < 1 || gnn_dim < 1 || hop_dim < 1)
        throw ConfigError("model config: encoder dims must be positive");
    if (max_hops < 0 || max_neighbors < 0)
        throw ConfigError("model config: max_hops and max_neighbors must be >= 0");
    if (gate_out_dim < 0 || bag_dim < 1) throw ConfigError("model config: bad gate dims");
    if (!gate_enabled && gate_out_dim > 0 && gate_out_dim != gate_in_dim())
        throw ConfigError("model config: gate bypass requires gate_out_dim == gnn_dim + hop_dim");
    lm.validate();
}

std::string ModelConfig::to_json() const {
    nlohmann::ordered_json j;
    j["feat_dim"] = feat_dim;
    j["gnn_layers"] = gnn_layers;
    j["gnn_dim"] = gnn_dim;
    j["hop_dim"] = hop_dim;
    j["max_hops"] = max_hops;
    j["max_neighbors"] = max_neighbors;
    j["gate_out_dim"] = gate_out_dim;
    j["bag_dim"] = bag_dim;
    j["gate_enabled"] = gate_enabled;
    j["zero_hop_encodings"] = zero_hop_encodings;
    j["feature_seed"] = feature_seed;
    j["lm"] = {{"dim", lm.dim},         {"blocks", lm.blocks},   {"heads", lm.heads},
               {"ffn_dim", lm.ffn_dim}, {"context", lm.context}, {"vocab_cap", lm.vocab_cap}};
    return j.dump();
}

ModelConfig ModelConfig::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    ModelConfig c;
    c.feat_dim = j.at("feat_dim").get<int>();
    c.gnn_layers = j.at("gnn_layers").get<int>();
    c.gnn_dim = j.at("gnn_dim").get<int>();
    c.hop_dim = j.at("hop_dim").get<int>();
    c.max_hops = j.at("max_hops").get<int>();
    c.max_neighbors = j.at("max_neighbors").get<int>();
    c.gate_out_dim = j.at("gate_out_dim").get<int>();
    c.bag_dim = j.at("bag_dim").get<int>();
    c.gate_enabled = j.at("gate_enabled").get<bool>();
    c.zero_hop_encodings = j.at("zero_hop_encodings").get<bool>();
    c.feature_seed = j.at("feature_seed").get<uint64_t>();
    const auto& l = j.at("lm");
    c.lm.dim = l.at("dim").get<int>();
    c.lm.blocks = l.at("blocks").get<int>();
    c.lm.heads = l.at("heads").get<int>();
    c.lm.ffn_dim = l.at("ffn_dim").get<int>();
    c.lm.context = l.at("context").get<int>();
    c.lm.vocab_cap = l.at("vocab_cap").get<int>();
    c.validate();
    return c;
}

Model Model::init(const ModelConfig& cfg, uint64_t seed) {
    cfg.validate();
    Rng root(seed);
    Model m;
    m.cfg = cfg;
    Rng gnn_rng = root.fork(1);
    m.gnn = GnnParams::init(cfg.gnn_layers, cfg.feat_dim, cfg.gnn_dim, gnn_rng);
    Rng hop_rng = root.fork(2);
    m.hops = HopTable::init(cfg.max_hops, cfg.hop_dim, hop_rng);
    if (cfg.zero_hop_encodings) m.hops.table = Matrix(cfg.max_hops + 1, cfg.hop_dim);
    Rng gate_rng = root.fork(3);
    m.gate = GateParams::init(cfg.gate_in_dim(), cfg.gate_out(), gate_rng);
    Rng alpha_rng = root.fork(4);
    m.alpha = TaskTextEncoderParams::init(cfg.gate_in_dim(), cfg.bag_dim, alpha_rng);
    Rng proj_rng = root.fork(5);
    m.proj = ProjectorParams::init(cfg.lm.dim, cfg.gate_out(), proj_rng);
    return m;
}

void Model::validate() const {
    cfg.validate();
    gnn.validate(cfg.feat_dim);
    if (gnn.output_dim() != cfg.gnn_dim) throw ConfigError("model: gnn output dim mismatch");
    if (hops.table.rows != cfg.max_hops + 1 || hops.table.cols != cfg.hop_dim)
        throw ConfigError("model: hop table shape mismatch");
    gate.validate();
    if (gate.in_dim() != cfg.gate_in_dim() || gate.out_dim() != cfg.gate_out())
        throw ConfigError("model: gate dims do not match config");
    if (alpha.out_dim() != cfg.gate_in_dim() || alpha.bag_dim() != cfg.bag_dim)
        throw ConfigError("model: task text encoder dims do not match config");
    proj.validate(cfg.gate_out(), cfg.lm.dim);
}

template <typename M, typename Mat>
static std::vector<std::pair<std::string, Mat*>> model_walk(M& m) {
    std::vector<std::pair<std::string, Mat*>> out;
    for (size_t l = 0; l < m.gnn.layers.size(); ++l)
        out.push_back({"gnn.w" + std::to_string(l), &m.gnn.layers[l]});
    out.push_back({"hops.table", &m.hops.table});
    out.push_back({"gate.w_inv", &m.gate.w_inv});
    out.push_back({"gate.m_inv", &m.gate.m_inv});
    out.push_back({"gate.w_rel", &m.gate.w_rel});
    out.push_back({"gate.m_rel", &m.gate.m_rel});
    out.push_back({"gate.w_agg", &m.gate.w_agg});
    out.push_back({"alpha.proj", &m.alpha.projection});
    out.push_back({"proj.w", &m.proj.w});
    out.push_back({"proj.b", &m.proj.b});
    return out;
}

std::vector<std::pair<std::string, Matrix*>> Model::named_tensors() {
    return model_walk<Model, Matrix>(*this);
}

std::vector<std::pair<std::string, const Matrix*>> Model::named_tensors() const {
    return model_walk<const Model, const Matrix>(*this);
}

uint64_t Model::digest(const std::string& prefix) const {
    Fnv1a f;
    for (const auto& [name, mat] : named_tensors()) {
        if (name.rfind(prefix, 0) != 0) continue;
        f.update(name);
        f.update(*mat);
    }
    return f.value();
}

std::vector<std::string> trainable_names(const ModelConfig& cfg, Stage stage,
                                         bool include_hop_encodings) {
    std::vector<std::string> out;
    const bool hops_usable = !cfg.zero_hop_encodings;
    if (stage == Stage::kPretrain) {
        for (int l = 0; l < cfg.gnn_layers; ++l) out.push_back("gnn.w" + std::to_string(l));
        if (hops_usable) out.push_back("hops.table");
        if (cfg.gate_enabled) {
            out.push_back("gate.w_inv");
            out.push_back("gate.m_inv");
            out.push_back("gate.w_rel");
            out.push_back("gate.w_agg");
            out.push_back("alpha.proj");
        }
        out.push_back("proj.w");
        out.push_back("proj.b");
    } else {
        if (cfg.gate_enabled) {
            out.push_back("gate.m_rel");
            out.push_back("gate.w_rel");
            out.push_back("gate.w_agg");
        }
        // The designated adaptation surface lives inside the gate; with the
        // gate bypassed only the hop table remains tunable.
        if (include_hop_encodings && hops_usable) out.push_back("hops.table");
    }
    return out;
}

ModelVars bind_model(Tape& tape, const Model& model, const std::set<std::string>& trainable) {
    ModelVars v;
    auto bind = [&](const std::string& name, const Matrix& m) {
        Var var = tape.leaf(m, trainable.count(name) > 0);
        v.by_name[name] = var;
        return var;
    };
    for (size_t l = 0; l < model.gnn.layers.size(); ++l)
        v.gnn_layers.push_back(bind("gnn.w" + std::to_string(l), model.gnn.layers[l]));
    v.hop_table = bind("hops.table", model.hops.table);
    v.w_inv = bind("gate.w_inv", model.gate.w_inv);
    v.m_inv = bind("gate.m_inv", model.gate.m_inv);
    v.w_rel = bind("gate.w_rel", model.gate.w_rel);
    v.m_rel = bind("gate.m_rel", model.gate.m_rel);
    v.w_agg = bind("gate.w_agg", model.gate.w_agg);
    v.alpha_proj = bind("alpha.proj", model.alpha.projection);
    v.proj_w = bind("proj.w", model.proj.w);
    v.proj_b = bind("proj.b", model.proj.b);
    return v;
}

Var encode_subgraph(Tape& tape, const NeighborhoodSubgraph& sub, const ModelConfig& cfg,
                    const ModelVars& vars, Var m_rel) {
    Var h = gnn_forward(tape, sub, vars.gnn_layers);
    Var x = attach_hop_encodings(tape, h, sub, vars.hop_table);
    if (cfg.gate_enabled)
        x = gate_forward(tape, x, vars.w_rel, m_rel, vars.w_inv, vars.m_inv, vars.w_agg);
    return project(tape, x, vars.proj_w, vars.proj_b);
}

}  // namespace graphlm
