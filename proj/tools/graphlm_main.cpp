// Command-line front end: data generation, LM bootstrap, pre-training,
// few-shot adaptation, inference, evaluation and efficiency reporting, all
// driven by one JSON config. Exit codes: 0 success, 1 usage error, 2 data or
// config error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "graphlm/bootstrap_corpus.hpp"
#include "graphlm/checkpoint.hpp"
#include "graphlm/config.hpp"
#include "graphlm/digest.hpp"
#include "graphlm/errors.hpp"
#include "graphlm/eval.hpp"
#include "graphlm/train.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace graphlm;

namespace {

struct OutDir {
    fs::path dir;
    std::vector<std::string> files;

    explicit OutDir(const std::string& path) : dir(path) { fs::create_directories(dir); }

    std::string path(const std::string& name) {
        files.push_back(name);
        return (dir / name).string();
    }

    void echo_config(const RunConfig& cfg) {
        std::ofstream out(dir / "config.json");
        out << cfg.to_json_text();
        files.push_back("config.json");
    }

    void write_manifest() {
        nlohmann::ordered_json j;
        for (const auto& f : files) j[f] = hex64(file_digest((dir / f).string()));
        std::ofstream out(dir / "manifest.json");
        out << j.dump(2) << '\n';
    }
};

RunConfig load_config(const std::string& path, std::optional<uint64_t> seed_override) {
    RunConfig cfg = RunConfig::from_file(path);
    if (seed_override) {
        cfg.seed = *seed_override;
        cfg.train.seed = *seed_override;
    }
    return cfg;
}

TemplateSet load_templates(const RunConfig& cfg) {
    return cfg.templates_dir.empty() ? TemplateSet::builtin()
                                     : TemplateSet::load_dir(cfg.templates_dir);
}

TextAttributedGraph primary_graph(const RunConfig& cfg) {
    if (!cfg.data.nodes_file.empty()) {
        std::vector<std::string> warnings;
        auto g = load_tag_jsonl(cfg.data.nodes_file, cfg.data.edges_file, cfg.model.feat_dim,
                                cfg.model.feature_seed, &warnings);
        for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
        return g;
    }
    if (cfg.data.has_synthetic)
        return generate_synthetic_tag(cfg.data.synthetic, cfg.seed, cfg.model.feat_dim,
                                      cfg.model.feature_seed);
    throw ConfigError("config: data section needs nodes_file/edges_file or a synthetic spec");
}

std::vector<std::string> eval_class_names(const TextAttributedGraph& graph, int ways) {
    auto names = graph.class_names();
    if (names.empty()) throw DataError("graph has no labeled nodes");
    if (ways > 0 && ways < static_cast<int>(names.size()))
        names.resize(static_cast<size_t>(ways));
    return names;
}

std::string derived_task_text(const RunConfig& cfg, const TextAttributedGraph& graph) {
    if (!cfg.adapt.task_text.empty()) return cfg.adapt.task_text;
    if (cfg.adapt.task == "summarize") return summary_task_text();
    return classification_task_text(eval_class_names(graph, cfg.eval.ways));
}

struct LoadedStack {
    Model model;
    LmParams lm;
    uint64_t base_file_digest = 0;
    std::optional<AdapterCheckpoint> adapter;
};

LoadedStack load_stack(const std::string& base_path, const std::string& lm_path,
                       const std::string& adapter_path) {
    LoadedStack s{Model{}, load_lm_checkpoint(lm_path), 0, std::nullopt};
    LoadedModel base = load_model_checkpoint(base_path);
    if (base.lm_digest != s.lm.digest())
        throw ConfigError("lm checkpoint does not match the digest recorded in the base model");
    s.model = std::move(base.model);
    s.base_file_digest = file_digest(base_path);
    if (!adapter_path.empty()) {
        AdapterCheckpoint a = load_adapter_checkpoint(adapter_path);
        if (a.base_digest != s.base_file_digest)
            throw ConfigError("adapter was trained against a different base checkpoint");
        apply_adapter(s.model, a);
        s.adapter = std::move(a);
    }
    return s;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write: " + path);
    out << text;
}

int cmd_gen_data(const RunConfig& cfg, const std::string& out_path) {
    if (!cfg.data.has_synthetic)
        throw ConfigError("gen-data: config has no data.synthetic section");
    OutDir out(out_path);
    auto graph = generate_synthetic_tag(cfg.data.synthetic, cfg.seed, cfg.model.feat_dim,
                                        cfg.model.feature_seed);
    save_tag_jsonl(graph, out.path("nodes.jsonl"), out.path("edges.jsonl"));
    out.echo_config(cfg);
    out.write_manifest();
    std::cout << "generated " << graph.num_nodes() << " nodes, " << graph.num_edges()
              << " edges\n";
    return 0;
}

int cmd_bootstrap_lm(const RunConfig& cfg, const std::string& out_path) {
    OutDir out(out_path);
    TemplateSet templates = load_templates(cfg);
    TextAttributedGraph primary = primary_graph(cfg);
    std::vector<TextAttributedGraph> extras;
    for (const auto& [nodes, edges] : cfg.data.extra_graphs)
        extras.push_back(load_tag_jsonl(nodes, edges, cfg.model.feat_dim, cfg.model.feature_seed));
    std::vector<const TextAttributedGraph*> graphs = {&primary};
    for (const auto& g : extras) graphs.push_back(&g);

    auto corpus = build_bootstrap_corpus(graphs, 0, cfg.model, cfg.bootstrap, templates,
                                         cfg.seed, cfg.eval.title_len);
    BootstrapConfig bc;
    bc.lm = cfg.model.lm;
    bc.lr = cfg.bootstrap.lr;
    bc.max_epochs = cfg.bootstrap.max_epochs;
    bc.max_steps = cfg.bootstrap.max_steps;
    bc.plateau_tol = cfg.bootstrap.plateau_tol;
    BootstrapResult res = lm_bootstrap(corpus, bc, cfg.seed);
    save_lm_checkpoint(out.path("lm.ckpt"), res.lm);

    LossLog log;
    for (size_t e = 0; e < res.epoch_losses.size(); ++e)
        log.push_back({static_cast<int64_t>(e), "bootstrap", res.epoch_losses[e]});
    write_loss_log_csv(out.path("bootstrap_loss.csv"), log);
    out.echo_config(cfg);
    out.write_manifest();
    std::cout << "bootstrap: corpus " << corpus.size() << " lines, vocab "
              << res.lm.vocab.size() << ", loss " << res.initial_loss << " -> "
              << res.final_loss << "\n";
    return 0;
}

int cmd_pretrain(const RunConfig& cfg, const std::string& out_path, const std::string& lm_path) {
    OutDir out(out_path);
    TemplateSet templates = load_templates(cfg);
    TextAttributedGraph graph = primary_graph(cfg);
    LmParams lm = load_lm_checkpoint(lm_path);
    PretrainResult res = pretrain(cfg.model, cfg.seed, {&graph}, lm, cfg.train, templates);
    save_model_checkpoint(out.path("model.ckpt"), res.model, res.lm_digest);
    write_loss_log_csv(out.path("pretrain_loss.csv"), res.log);
    out.echo_config(cfg);
    out.write_manifest();
    std::cout << "pretrain: " << res.log.size() << " steps\n";
    return 0;
}

int cmd_adapt(const RunConfig& cfg, const std::string& out_path, const std::string& base_path,
              const std::string& lm_path, std::optional<int> shots_override) {
    OutDir out(out_path);
    TemplateSet templates = load_templates(cfg);
    TextAttributedGraph graph = primary_graph(cfg);
    LoadedStack stack = load_stack(base_path, lm_path, "");

    int shots = shots_override.value_or(cfg.adapt.shots);
    auto names = eval_class_names(graph, cfg.eval.ways);
    FewShotExampleSet examples =
        sample_few_shot(graph, names, shots, derive_seed(cfg.seed, 71));
    std::string task_text = derived_task_text(cfg, graph);

    AdaptResult res = adapt(stack.model, stack.base_file_digest, graph, examples, task_text,
                            cfg.adapt.task, stack.lm, cfg.train, templates);
    save_adapter_checkpoint(out.path("adapter.ckpt"), res.adapter);
    write_loss_log_csv(out.path("adapt_loss.csv"), res.log);
    out.echo_config(cfg);
    out.write_manifest();
    std::cout << "adapt: " << res.log.size() << " steps, " << examples.pairs.size()
              << " examples (" << shots << " per class)\n";
    return 0;
}

int cmd_infer(const RunConfig& cfg, const std::string& out_path, const std::string& base_path,
              const std::string& lm_path, const std::string& adapter_path, int64_t target) {
    TemplateSet templates = load_templates(cfg);
    TextAttributedGraph graph = primary_graph(cfg);
    LoadedStack stack = load_stack(base_path, lm_path, adapter_path);

    std::string task_kind = stack.adapter ? stack.adapter->task_kind : cfg.adapt.task;
    std::string task_text =
        stack.adapter ? stack.adapter->task_text : derived_task_text(cfg, graph);
    if (!stack.adapter)
        stack.model.gate.m_rel = encode_task_text(task_text, stack.model.alpha);

    const PromptTemplate& tpl =
        templates.get(task_kind == "summarize" ? "summarize" : "classify");
    int max_new = task_kind == "summarize" ? cfg.eval.max_new_tokens_summary
                                           : cfg.eval.max_new_tokens_classify;
    std::string generated =
        generate_for_node(stack.model, stack.lm, graph, target, task_text, tpl, max_new,
                          derive_seed(0x9e37, 6, static_cast<uint64_t>(target)));

    nlohmann::ordered_json j;
    j["target"] = target;
    j["generated"] = generated;
    if (task_kind == "classify") {
        auto parsed = parse_class_answer(generated, eval_class_names(graph, cfg.eval.ways));
        j["parsed"] = parsed ? nlohmann::json(*parsed) : nlohmann::json();
    }
    std::cout << j.dump() << '\n';
    if (!out_path.empty()) {
        OutDir out(out_path);
        write_text(out.path("prediction.jsonl"), j.dump() + "\n");
        out.echo_config(cfg);
        out.write_manifest();
    }
    return 0;
}

int cmd_eval(const RunConfig& cfg, const std::string& out_path, const std::string& base_path,
             const std::string& lm_path, const std::string& adapter_path) {
    OutDir out(out_path);
    TemplateSet templates = load_templates(cfg);
    TextAttributedGraph graph = primary_graph(cfg);
    LoadedStack stack = load_stack(base_path, lm_path, adapter_path);

    std::string task_kind = stack.adapter ? stack.adapter->task_kind : cfg.adapt.task;
    std::string task_text =
        stack.adapter ? stack.adapter->task_text : derived_task_text(cfg, graph);
    std::vector<int64_t> excluded;
    int shots = 0;
    auto names = eval_class_names(graph, cfg.eval.ways);
    if (stack.adapter) {
        excluded = stack.adapter->example_node_ids;
        shots = static_cast<int>(excluded.size() / std::max<size_t>(1, names.size()));
    } else {
        stack.model.gate.m_rel = encode_task_text(task_text, stack.model.alpha);
    }

    std::vector<PredictionRecord> records;
    EvalReport rep;
    if (task_kind == "summarize") {
        rep = evaluate_summaries(stack.model, stack.lm, graph, cfg.eval.targets_per_way,
                                 cfg.eval.seeds, excluded, task_text, templates,
                                 cfg.eval.max_new_tokens_summary, shots, cfg.eval.title_len,
                                 &records);
    } else {
        rep = evaluate_classification(stack.model, stack.lm, graph, names,
                                      cfg.eval.targets_per_way, cfg.eval.seeds, excluded,
                                      task_text, templates, cfg.eval.max_new_tokens_classify,
                                      shots, &records);
    }
    write_eval_report_csv(out.path("report.csv"), rep);
    write_text(out.path("report.txt"), format_eval_report(rep));
    write_predictions_jsonl(out.path("predictions.jsonl"), records);
    out.echo_config(cfg);
    out.write_manifest();
    std::cout << format_eval_report(rep);
    return 0;
}

ModelConfig reference_scale_config() {
    // Full-scale profile: 128-d features, three 128-d encoder layers, hop
    // vectors of size 4, 4096-d LM embeddings.
    ModelConfig c;
    c.feat_dim = 128;
    c.gnn_layers = 3;
    c.gnn_dim = 128;
    c.hop_dim = 4;
    c.max_hops = 2;
    c.max_neighbors = 100;
    c.bag_dim = 65536;
    c.lm.dim = 4096;
    c.lm.blocks = 2;
    c.lm.heads = 2;
    c.lm.ffn_dim = 256;
    c.lm.context = 256;
    return c;
}

int cmd_report(const RunConfig& cfg, const std::string& out_path,
               const std::string& adapter_path, const std::string& lm_path) {
    OutDir out(out_path);
    std::ostringstream rep;
    auto describe = [&](const char* label, const ModelConfig& mc) {
        auto counts = count_tunable_parameters(mc, cfg.train.include_hop_encodings);
        rep << label << ": tunable total " << counts.tunable_total << " / pre-train total "
            << counts.pretrain_total << " (ratio "
            << static_cast<double>(counts.tunable_total) /
                   static_cast<double>(counts.pretrain_total)
            << ")\n";
        for (const auto& [name, n] : counts.tunable) rep << "  " << name << ": " << n << '\n';
        rep << "  adapter payload bytes (f64): " << counts.tunable_total * 8 << '\n';
    };
    describe("configured dims", cfg.model);
    describe("reference dims", reference_scale_config());
    if (!adapter_path.empty())
        rep << "adapter file size: " << fs::file_size(adapter_path) << " bytes\n";

    if (!lm_path.empty() && (!cfg.data.nodes_file.empty() || cfg.data.has_synthetic)) {
        TextAttributedGraph graph = primary_graph(cfg);
        LmParams lm = load_lm_checkpoint(lm_path);
        TemplateSet templates = load_templates(cfg);
        auto names = eval_class_names(graph, cfg.eval.ways);
        std::string task_text = classification_task_text(names);
        int64_t target = graph.id_of(0);
        rep << "prompt length comparison (tokens):\n";
        for (int k : {0, 5, 20, 50}) {
            FewShotExampleSet ex;
            ex.class_names = names;
            ex.shots = k;
            if (k > 0) {
                try {
                    ex = sample_few_shot(graph, names, k, derive_seed(cfg.seed, 72));
                } catch (const DataError&) {
                    rep << "  K=" << k << ": not enough labeled nodes, skipped\n";
                    continue;
                }
            }
            int icl = icl_prompt_length(ex, graph, task_text, templates.get("classify"),
                                        lm.vocab);
            int query = query_length(graph, target, cfg.model, task_text,
                                     templates.get("classify"), lm.vocab,
                                     derive_seed(0x9e37, 6, static_cast<uint64_t>(target)));
            rep << "  K=" << k << ": icl_prompt=" << icl << " query=" << query << '\n';
        }
    }
    write_text(out.path("efficiency.txt"), rep.str());
    out.echo_config(cfg);
    out.write_manifest();
    std::cout << rep.str();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"graph language model adapter pipeline"};
    app.require_subcommand(1);

    std::string config_path, out_path, base_path, lm_path, adapter_path;
    std::optional<uint64_t> seed_override;
    std::optional<int> shots_override;
    std::optional<int> ways_override;
    int64_t target_id = 0;

    auto add_common = [&](CLI::App* sub, bool needs_out) {
        sub->add_option("--config", config_path, "JSON config file")->required();
        auto* o = sub->add_option("--out", out_path, "output directory");
        if (needs_out) o->required();
        sub->add_option("--seed", seed_override, "override the config seed");
    };

    auto* gen = app.add_subcommand("gen-data", "generate a synthetic text-attributed graph");
    add_common(gen, true);
    auto* boot = app.add_subcommand("bootstrap-lm", "train the frozen decoder on plain text");
    add_common(boot, true);
    auto* pre = app.add_subcommand("pretrain", "run the three pre-training stages");
    add_common(pre, true);
    pre->add_option("--lm", lm_path, "bootstrapped lm checkpoint")->required();
    auto* ada = app.add_subcommand("adapt", "few-shot adaptation of the tunable subset");
    add_common(ada, true);
    ada->add_option("--base", base_path, "pre-trained model checkpoint")->required();
    ada->add_option("--lm", lm_path, "bootstrapped lm checkpoint")->required();
    ada->add_option("--shots", shots_override, "examples per class");
    ada->add_option("--ways", ways_override, "number of classes in the task");
    auto* inf = app.add_subcommand("infer", "answer one task query");
    add_common(inf, false);
    inf->add_option("--base", base_path, "pre-trained model checkpoint")->required();
    inf->add_option("--lm", lm_path, "bootstrapped lm checkpoint")->required();
    inf->add_option("--adapter", adapter_path, "adapter checkpoint");
    inf->add_option("--target", target_id, "target node id")->required();
    inf->add_option("--ways", ways_override, "number of classes in the task");
    auto* ev = app.add_subcommand("eval", "episodic evaluation");
    add_common(ev, true);
    ev->add_option("--base", base_path, "pre-trained model checkpoint")->required();
    ev->add_option("--lm", lm_path, "bootstrapped lm checkpoint")->required();
    ev->add_option("--adapter", adapter_path, "adapter checkpoint");
    ev->add_option("--ways", ways_override, "number of classes in the task");
    auto* repc = app.add_subcommand("report", "efficiency accounting");
    add_common(repc, true);
    repc->add_option("--adapter", adapter_path, "adapter checkpoint to size");
    repc->add_option("--lm", lm_path, "lm checkpoint for token counting");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        RunConfig cfg = load_config(config_path, seed_override);
        if (ways_override) cfg.eval.ways = *ways_override;
        if (gen->parsed()) return cmd_gen_data(cfg, out_path);
        if (boot->parsed()) return cmd_bootstrap_lm(cfg, out_path);
        if (pre->parsed()) return cmd_pretrain(cfg, out_path, lm_path);
        if (ada->parsed()) return cmd_adapt(cfg, out_path, base_path, lm_path, shots_override);
        if (inf->parsed())
            return cmd_infer(cfg, out_path, base_path, lm_path, adapter_path, target_id);
        if (ev->parsed()) return cmd_eval(cfg, out_path, base_path, lm_path, adapter_path);
        if (repc->parsed()) return cmd_report(cfg, out_path, adapter_path, lm_path);
        std::cerr << "error: no subcommand\n";
        return 1;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
