#include "graphlm/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "graphlm/errors.hpp"
#include "json.hpp"

namespace graphlm {

namespace {

using nlohmann::json;

// Strict section reader: every consumed key is recorded, leftovers reject.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j.is_object()) throw ConfigError("config: " + path_ + " must be an object");
    }

    template <typename T>
    void get(const char* key, T& out) {
        if (j_.contains(key)) {
            try {
                out = j_.at(key).get<T>();
            } catch (const std::exception&) {
                throw ConfigError("config: bad value for " + path_ + "." + key);
            }
        }
        used_.insert(key);
    }

    bool has(const char* key) {
        used_.insert(key);
        return j_.contains(key);
    }

    const json& sub(const char* key) {
        used_.insert(key);
        return j_.at(key);
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!used_.count(it.key()))
                throw ConfigError("config: unknown key " + path_ + "." + it.key());
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

}  // namespace

RunConfig RunConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    RunConfig cfg;
    Section root(j, "");
    if (!root.has("seed")) throw ConfigError("config: missing mandatory field 'seed'");
    root.get("seed", cfg.seed);
    root.get("templates_dir", cfg.templates_dir);

    if (root.has("data")) {
        Section d(root.sub("data"), "data");
        d.get("nodes_file", cfg.data.nodes_file);
        d.get("edges_file", cfg.data.edges_file);
        if (d.has("synthetic")) {
            cfg.data.has_synthetic = true;
            Section s(d.sub("synthetic"), "data.synthetic");
            s.get("num_classes", cfg.data.synthetic.num_classes);
            s.get("nodes_per_class", cfg.data.synthetic.nodes_per_class);
            s.get("p_intra", cfg.data.synthetic.p_intra);
            s.get("p_inter", cfg.data.synthetic.p_inter);
            s.get("vocab_per_class", cfg.data.synthetic.vocab_per_class);
            s.get("shared_vocab", cfg.data.synthetic.shared_vocab);
            s.get("text_len", cfg.data.synthetic.text_len);
            s.finish();
        }
        if (d.has("extra_graphs")) {
            const json& eg = d.sub("extra_graphs");
            if (!eg.is_array()) throw ConfigError("config: data.extra_graphs must be an array");
            for (size_t i = 0; i < eg.size(); ++i) {
                Section e(eg[i], "data.extra_graphs[" + std::to_string(i) + "]");
                std::string nodes, edges;
                e.get("nodes_file", nodes);
                e.get("edges_file", edges);
                e.finish();
                cfg.data.extra_graphs.push_back({nodes, edges});
            }
        }
        d.finish();
    }

    if (root.has("model")) {
        Section m(root.sub("model"), "model");
        m.get("feat_dim", cfg.model.feat_dim);
        m.get("gnn_layers", cfg.model.gnn_layers);
        m.get("gnn_dim", cfg.model.gnn_dim);
        m.get("hop_dim", cfg.model.hop_dim);
        m.get("max_hops", cfg.model.max_hops);
        m.get("max_neighbors", cfg.model.max_neighbors);
        m.get("gate_out_dim", cfg.model.gate_out_dim);
        m.get("bag_dim", cfg.model.bag_dim);
        m.get("gate_enabled", cfg.model.gate_enabled);
        m.get("zero_hop_encodings", cfg.model.zero_hop_encodings);
        m.get("feature_seed", cfg.model.feature_seed);
        if (m.has("lm")) {
            Section l(m.sub("lm"), "model.lm");
            l.get("dim", cfg.model.lm.dim);
            l.get("blocks", cfg.model.lm.blocks);
            l.get("heads", cfg.model.lm.heads);
            l.get("ffn_dim", cfg.model.lm.ffn_dim);
            l.get("context", cfg.model.lm.context);
            l.get("vocab_cap", cfg.model.lm.vocab_cap);
            l.finish();
        }
        m.finish();
    }

    if (root.has("train")) {
        Section t(root.sub("train"), "train");
        t.get("lr", cfg.train.lr);
        t.get("beta1", cfg.train.beta1);
        t.get("beta2", cfg.train.beta2);
        t.get("eps", cfg.train.eps);
        t.get("epochs_match", cfg.train.epochs_match);
        t.get("epochs_classify", cfg.train.epochs_classify);
        t.get("epochs_link", cfg.train.epochs_link);
        t.get("batch_size", cfg.train.batch_size);
        t.get("link_pairs_per_epoch", cfg.train.link_pairs_per_epoch);
        t.get("weight_match", cfg.train.weight_match);
        t.get("weight_classify", cfg.train.weight_classify);
        t.get("weight_link", cfg.train.weight_link);
        t.get("adapt_lr", cfg.train.adapt_lr);
        t.get("adapt_epochs", cfg.train.adapt_epochs);
        t.get("include_hop_encodings", cfg.train.include_hop_encodings);
        t.finish();
    }
    cfg.train.seed = cfg.seed;

    if (root.has("bootstrap")) {
        Section b(root.sub("bootstrap"), "bootstrap");
        b.get("lr", cfg.bootstrap.lr);
        b.get("max_epochs", cfg.bootstrap.max_epochs);
        b.get("max_steps", cfg.bootstrap.max_steps);
        b.get("plateau_tol", cfg.bootstrap.plateau_tol);
        b.get("classify_examples", cfg.bootstrap.classify_examples);
        b.get("link_examples", cfg.bootstrap.link_examples);
        b.get("summarize_examples", cfg.bootstrap.summarize_examples);
        b.get("choice_lines", cfg.bootstrap.choice_lines);
        b.get("pointer_lines", cfg.bootstrap.pointer_lines);
        b.finish();
    }

    if (root.has("adapt")) {
        Section a(root.sub("adapt"), "adapt");
        a.get("shots", cfg.adapt.shots);
        a.get("task", cfg.adapt.task);
        a.get("task_text", cfg.adapt.task_text);
        a.finish();
    }

    if (root.has("eval")) {
        Section e(root.sub("eval"), "eval");
        e.get("ways", cfg.eval.ways);
        e.get("targets_per_way", cfg.eval.targets_per_way);
        e.get("seeds", cfg.eval.seeds);
        e.get("max_new_tokens_classify", cfg.eval.max_new_tokens_classify);
        e.get("max_new_tokens_summary", cfg.eval.max_new_tokens_summary);
        e.get("title_len", cfg.eval.title_len);
        e.finish();
    }
    root.finish();

    cfg.model.validate();
    cfg.train.validate();
    if (cfg.adapt.task != "classify" && cfg.adapt.task != "summarize")
        throw ConfigError("config: adapt.task must be 'classify' or 'summarize'");
    if (cfg.eval.seeds.empty()) throw ConfigError("config: eval.seeds must not be empty");
    return cfg;
}

RunConfig RunConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json_text(buf.str());
}

std::string RunConfig::to_json_text() const {
    nlohmann::ordered_json j;
    j["seed"] = seed;
    j["templates_dir"] = templates_dir;
    nlohmann::ordered_json d;
    d["nodes_file"] = data.nodes_file;
    d["edges_file"] = data.edges_file;
    if (data.has_synthetic) {
        d["synthetic"] = {{"num_classes", data.synthetic.num_classes},
                          {"nodes_per_class", data.synthetic.nodes_per_class},
                          {"p_intra", data.synthetic.p_intra},
                          {"p_inter", data.synthetic.p_inter},
                          {"vocab_per_class", data.synthetic.vocab_per_class},
                          {"shared_vocab", data.synthetic.shared_vocab},
                          {"text_len", data.synthetic.text_len}};
    }
    nlohmann::ordered_json eg = nlohmann::ordered_json::array();
    for (const auto& [n, e] : data.extra_graphs)
        eg.push_back({{"nodes_file", n}, {"edges_file", e}});
    d["extra_graphs"] = eg;
    j["data"] = d;
    j["model"] = nlohmann::ordered_json::parse(model.to_json());
    j["train"] = {{"lr", train.lr},
                  {"beta1", train.beta1},
                  {"beta2", train.beta2},
                  {"eps", train.eps},
                  {"epochs_match", train.epochs_match},
                  {"epochs_classify", train.epochs_classify},
                  {"epochs_link", train.epochs_link},
                  {"batch_size", train.batch_size},
                  {"link_pairs_per_epoch", train.link_pairs_per_epoch},
                  {"weight_match", train.weight_match},
                  {"weight_classify", train.weight_classify},
                  {"weight_link", train.weight_link},
                  {"adapt_lr", train.adapt_lr},
                  {"adapt_epochs", train.adapt_epochs},
                  {"include_hop_encodings", train.include_hop_encodings}};
    j["bootstrap"] = {{"lr", bootstrap.lr},
                      {"max_epochs", bootstrap.max_epochs},
                      {"max_steps", bootstrap.max_steps},
                      {"plateau_tol", bootstrap.plateau_tol},
                      {"classify_examples", bootstrap.classify_examples},
                      {"link_examples", bootstrap.link_examples},
                      {"summarize_examples", bootstrap.summarize_examples},
                      {"choice_lines", bootstrap.choice_lines},
                      {"pointer_lines", bootstrap.pointer_lines}};
    j["adapt"] = {{"shots", adapt.shots}, {"task", adapt.task}, {"task_text", adapt.task_text}};
    nlohmann::ordered_json ev;
    ev["ways"] = eval.ways;
    ev["targets_per_way"] = eval.targets_per_way;
    ev["seeds"] = eval.seeds;
    ev["max_new_tokens_classify"] = eval.max_new_tokens_classify;
    ev["max_new_tokens_summary"] = eval.max_new_tokens_summary;
    ev["title_len"] = eval.title_len;
    j["eval"] = ev;
    return j.dump(2) + "\n";
}

}  // namespace graphlm
