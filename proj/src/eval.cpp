#include "graphlm/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "graphlm/errors.hpp"
#include "graphlm/rng.hpp"
#include "graphlm/textproc.hpp"
#include "json.hpp"

namespace graphlm {

std::optional<std::string> parse_class_answer(const std::string& text,
                                              const std::vector<std::string>& class_names) {
    if (class_names.empty()) throw DataError("parse_class_answer: no class names");
    auto words = split_words(text);
    int best_pos = -1;
    size_t best_class = 0;
    for (size_t ci = 0; ci < class_names.size(); ++ci) {
        auto cw = split_words(class_names[ci]);
        if (cw.empty()) continue;
        for (size_t start = 0; start + cw.size() <= words.size(); ++start) {
            bool match = true;
            for (size_t k = 0; k < cw.size(); ++k)
                if (words[start + k] != cw[k]) {
                    match = false;
                    break;
                }
            if (match) {
                if (best_pos < 0 || static_cast<int>(start) < best_pos) {
                    best_pos = static_cast<int>(start);
                    best_class = ci;
                }
                break;  // earliest occurrence of this class found
            }
        }
    }
    if (best_pos < 0) return std::nullopt;
    return class_names[best_class];
}

double bleu1(const std::string& candidate, const std::string& reference) {
    auto cand = split_words(candidate);
    auto ref = split_words(reference);
    if (cand.empty()) return 0.0;
    std::map<std::string, int> ref_counts;
    for (const auto& w : ref) ++ref_counts[w];
    std::map<std::string, int> cand_counts;
    for (const auto& w : cand) ++cand_counts[w];
    double clipped = 0.0;
    for (const auto& [w, n] : cand_counts) {
        auto it = ref_counts.find(w);
        if (it != ref_counts.end()) clipped += std::min(n, it->second);
    }
    double precision = clipped / static_cast<double>(cand.size());
    double c = static_cast<double>(cand.size());
    double r = static_cast<double>(ref.size());
    double bp = (c > r) ? 1.0 : std::exp(1.0 - r / (c > 0 ? c : 1.0));
    return precision * bp;
}

namespace {

struct EpisodeTargets {
    std::vector<std::pair<int64_t, std::string>> targets;  // (id, gold class)
};

EpisodeTargets pick_targets(const TextAttributedGraph& graph,
                            const std::vector<std::string>& class_names, int targets_per_way,
                            const std::vector<int64_t>& excluded, uint64_t seed) {
    std::set<int64_t> excl(excluded.begin(), excluded.end());
    Rng rng(seed);
    EpisodeTargets out;
    for (const auto& name : class_names) {
        std::vector<int64_t> pool;
        for (int v : graph.nodes_with_label(name)) {
            int64_t id = graph.id_of(v);
            if (!excl.count(id)) pool.push_back(id);
        }
        if (static_cast<int>(pool.size()) < targets_per_way)
            throw DataError("evaluate: class '" + name + "' has " + std::to_string(pool.size()) +
                            " eligible targets, need " + std::to_string(targets_per_way));
        for (int k : rng.sample_indices(static_cast<int>(pool.size()), targets_per_way))
            out.targets.push_back({pool[static_cast<size_t>(k)], name});
    }
    return out;
}

double population_std(const std::vector<double>& xs, double mean) {
    if (xs.size() < 2) return 0.0;
    double s = 0.0;
    for (double x : xs) s += (x - mean) * (x - mean);
    return std::sqrt(s / static_cast<double>(xs.size()));
}

}  // namespace

EvalReport evaluate_classification_with(
    const TextAttributedGraph& graph, const std::vector<std::string>& class_names,
    int targets_per_way, const std::vector<uint64_t>& seeds,
    const std::vector<int64_t>& excluded,
    const std::function<std::string(int64_t)>& predict,
    std::vector<PredictionRecord>* records) {
    if (class_names.empty()) throw DataError("evaluate: no class names");
    if (targets_per_way < 1) throw DataError("evaluate: targets_per_way must be >= 1");
    if (seeds.empty()) throw DataError("evaluate: no seeds");

    EvalReport rep;
    rep.task = "classification";
    rep.ways = static_cast<int>(class_names.size());
    rep.seeds = seeds;

    std::map<std::string, double> class_hits;
    int64_t total_targets = 0;
    double total_ms = 0.0;

    for (uint64_t seed : seeds) {
        auto episode = pick_targets(graph, class_names, targets_per_way, excluded, seed);
        int hits = 0;
        for (const auto& [id, gold] : episode.targets) {
            auto t0 = std::chrono::steady_clock::now();
            std::string generated = predict(id);
            auto t1 = std::chrono::steady_clock::now();
            total_ms += std::chrono::duration<double, std::milli>(t1 - t0).count();
            auto parsed = parse_class_answer(generated, class_names);
            bool correct = parsed && *parsed == gold;
            hits += correct ? 1 : 0;
            class_hits[gold] += correct ? 1.0 : 0.0;
            ++total_targets;
            if (records) records->push_back({id, gold, generated, parsed ? *parsed : ""});
        }
        rep.per_seed.push_back(static_cast<double>(hits) /
                               static_cast<double>(episode.targets.size()));
    }

    double mean = 0.0;
    for (double a : rep.per_seed) mean += a;
    mean /= static_cast<double>(rep.per_seed.size());
    rep.accuracy_mean = mean;
    rep.accuracy_std = population_std(rep.per_seed, mean);
    for (const auto& name : class_names)
        rep.per_class[name] = class_hits[name] /
                              (static_cast<double>(targets_per_way) * static_cast<double>(seeds.size()));
    rep.wall_clock_per_target_ms = total_ms / static_cast<double>(total_targets);
    return rep;
}

std::string generate_for_node(const Model& model, const LmParams& lm,
                              const TextAttributedGraph& graph, int64_t target,
                              const std::string& task_text, const PromptTemplate& tpl,
                              int max_new_tokens, uint64_t subgraph_seed) {
    auto sub = extract_neighborhood(graph, target, model.cfg.max_hops, model.cfg.max_neighbors,
                                    subgraph_seed);
    Tape tape;
    ModelVars vars = bind_model(tape, model, {});
    Var proj = encode_subgraph(tape, sub, model.cfg, vars, vars.m_rel);
    Matrix node_embs = tape.value(proj);
    MixedSequence seq = build_task_query(sub.size(), 0, graph.text(graph.index_of(target)), "",
                                         task_text, tpl, lm.vocab);
    return generate(seq, lm, node_embs, max_new_tokens);
}

EvalReport evaluate_classification(const Model& model, const LmParams& lm,
                                   const TextAttributedGraph& graph,
                                   const std::vector<std::string>& class_names,
                                   int targets_per_way, const std::vector<uint64_t>& seeds,
                                   const std::vector<int64_t>& excluded,
                                   const std::string& task_text, const TemplateSet& templates,
                                   int max_new_tokens, int shots_reported,
                                   std::vector<PredictionRecord>* records) {
    const PromptTemplate& tpl = templates.get("classify");
    auto predict = [&](int64_t id) {
        return generate_for_node(model, lm, graph, id, task_text, tpl, max_new_tokens,
                                 derive_seed(0x9e37, 6, static_cast<uint64_t>(id)));
    };
    EvalReport rep = evaluate_classification_with(graph, class_names, targets_per_way, seeds,
                                                  excluded, predict, records);
    rep.shots = shots_reported;
    return rep;
}

EvalReport evaluate_summaries(const Model& model, const LmParams& lm,
                              const TextAttributedGraph& graph, int targets_per_way,
                              const std::vector<uint64_t>& seeds,
                              const std::vector<int64_t>& excluded,
                              const std::string& task_text, const TemplateSet& templates,
                              int max_new_tokens, int shots_reported, int title_len,
                              std::vector<PredictionRecord>* records) {
    if (seeds.empty()) throw DataError("evaluate: no seeds");
    if (targets_per_way < 1) throw DataError("evaluate: targets_per_way must be >= 1");
    const PromptTemplate& tpl = templates.get("summarize");

    EvalReport rep;
    rep.task = "summary";
    rep.shots = shots_reported;
    rep.seeds = seeds;

    std::set<int64_t> excl(excluded.begin(), excluded.end());
    std::vector<int64_t> pool;
    for (int v = 0; v < graph.num_nodes(); ++v)
        if (!excl.count(graph.id_of(v))) pool.push_back(graph.id_of(v));
    if (pool.empty()) throw DataError("evaluate_summaries: no eligible targets");

    double total_ms = 0.0;
    int64_t total_targets = 0;
    for (uint64_t seed : seeds) {
        Rng rng(seed);
        int take = std::min<int>(targets_per_way, static_cast<int>(pool.size()));
        double score = 0.0;
        for (int k : rng.sample_indices(static_cast<int>(pool.size()), take)) {
            int64_t id = pool[static_cast<size_t>(k)];
            auto t0 = std::chrono::steady_clock::now();
            std::string generated =
                generate_for_node(model, lm, graph, id, task_text, tpl, max_new_tokens,
                                  derive_seed(0x9e37, 7, static_cast<uint64_t>(id)));
            auto t1 = std::chrono::steady_clock::now();
            total_ms += std::chrono::duration<double, std::milli>(t1 - t0).count();
            std::string reference = node_title(graph, graph.index_of(id), title_len);
            score += bleu1(generated, reference);
            ++total_targets;
            if (records) records->push_back({id, reference, generated, ""});
        }
        rep.per_seed.push_back(score / take);
    }
    double mean = 0.0;
    for (double a : rep.per_seed) mean += a;
    mean /= static_cast<double>(rep.per_seed.size());
    rep.accuracy_mean = mean;  // BLEU-1 mean for the summary task
    rep.accuracy_std = population_std(rep.per_seed, mean);
    rep.wall_clock_per_target_ms = total_ms / static_cast<double>(total_targets);
    return rep;
}

int icl_prompt_length(const FewShotExampleSet& examples, const TextAttributedGraph& graph,
                      const std::string& task_text, const PromptTemplate& classify_tpl,
                      const Vocabulary& vocab) {
    // Text-only baseline: every example's content and local structure is
    // spelled out in the prompt.
    std::ostringstream prompt;
    prompt << classify_tpl.text << '\n';
    for (const auto& [id, label] : examples.pairs) {
        int v = graph.index_of(id);
        prompt << "example: text: " << graph.text(v) << " ; neighbors:";
        for (int nb : graph.neighbors(v)) prompt << ' ' << graph.id_of(nb);
        prompt << " ; label: " << label << '\n';
    }
    prompt << "task: " << task_text << " answer:";
    return static_cast<int>(tokenize(prompt.str(), vocab).size());
}

int query_length(const TextAttributedGraph& graph, int64_t target, const ModelConfig& cfg,
                 const std::string& task_text, const PromptTemplate& tpl,
                 const Vocabulary& vocab, uint64_t subgraph_seed) {
    auto sub = extract_neighborhood(graph, target, cfg.max_hops, cfg.max_neighbors,
                                    subgraph_seed);
    MixedSequence seq = build_task_query(sub.size(), 0, graph.text(graph.index_of(target)), "",
                                         task_text, tpl, vocab);
    return seq.length();
}

void write_eval_report_csv(const std::string& path, const EvalReport& report) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write eval report: " + path);
    out << "task,ways,shots,metric_mean,metric_std,wall_clock_per_target_ms,seeds\n";
    out << report.task << ',' << report.ways << ',' << report.shots << ','
        << report.accuracy_mean << ',' << report.accuracy_std << ','
        << report.wall_clock_per_target_ms << ',';
    for (size_t i = 0; i < report.seeds.size(); ++i) out << (i ? " " : "") << report.seeds[i];
    out << '\n';
    out << "class,accuracy\n";
    for (const auto& [name, acc] : report.per_class) out << name << ',' << acc << '\n';
    out << "seed,accuracy\n";
    for (size_t i = 0; i < report.per_seed.size(); ++i)
        out << report.seeds[i] << ',' << report.per_seed[i] << '\n';
}

std::string format_eval_report(const EvalReport& report) {
    std::ostringstream os;
    os << report.task << " | ways=" << report.ways << " shots=" << report.shots
       << " | metric " << report.accuracy_mean << " +- " << report.accuracy_std << " | "
       << report.wall_clock_per_target_ms << " ms/target\n";
    for (const auto& [name, acc] : report.per_class)
        os << "  class " << name << ": " << acc << '\n';
    return os.str();
}

void write_predictions_jsonl(const std::string& path,
                             const std::vector<PredictionRecord>& records) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write predictions: " + path);
    for (const auto& r : records) {
        nlohmann::ordered_json j;
        j["target"] = r.target;
        j["gold"] = r.gold;
        j["generated"] = r.generated;
        j["parsed"] = r.parsed.empty() ? nlohmann::json() : nlohmann::json(r.parsed);
        out << j.dump() << '\n';
    }
}

}  // namespace graphlm
