#pragma once
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "graphlm/lm.hpp"
#include "graphlm/model.hpp"
#include "graphlm/tag.hpp"
#include "graphlm/templates.hpp"

namespace graphlm {

struct EvalReport {
    std::string task;
    int ways = 0;
    int shots = 0;
    double accuracy_mean = 0.0;
    double accuracy_std = 0.0;  // population std over seeds
    std::vector<double> per_seed;
    std::map<std::string, double> per_class;  // averaged over seeds
    double wall_clock_per_target_ms = 0.0;
    std::vector<uint64_t> seeds;
};

struct PredictionRecord {
    int64_t target = 0;
    std::string gold;
    std::string generated;
    std::string parsed;  // empty when no class matched
};

// Case-insensitive match of a class name on word boundaries; earliest
// occurrence wins, ties break by class order. nullopt when nothing matches.
std::optional<std::string> parse_class_answer(const std::string& text,
                                              const std::vector<std::string>& class_names);

// Clipped unigram precision times brevity penalty. Empty candidate -> 0.
double bleu1(const std::string& candidate, const std::string& reference);

// Generic episodic evaluation over a pluggable predictor (tests rig oracle or
// fixed predictors; production wraps the model). Per seed, targets_per_way
// eligible nodes are drawn per class, never touching excluded ids.
EvalReport evaluate_classification_with(
    const TextAttributedGraph& graph, const std::vector<std::string>& class_names,
    int targets_per_way, const std::vector<uint64_t>& seeds,
    const std::vector<int64_t>& excluded,
    const std::function<std::string(int64_t)>& predict,
    std::vector<PredictionRecord>* records = nullptr);

// Model-backed generation for one target node: subgraph, node-token pipeline,
// query build, greedy decode. Uses the model's stored task-related mask.
std::string generate_for_node(const Model& model, const LmParams& lm,
                              const TextAttributedGraph& graph, int64_t target,
                              const std::string& task_text, const PromptTemplate& tpl,
                              int max_new_tokens, uint64_t subgraph_seed);

EvalReport evaluate_classification(const Model& model, const LmParams& lm,
                                   const TextAttributedGraph& graph,
                                   const std::vector<std::string>& class_names,
                                   int targets_per_way, const std::vector<uint64_t>& seeds,
                                   const std::vector<int64_t>& excluded,
                                   const std::string& task_text, const TemplateSet& templates,
                                   int max_new_tokens, int shots_reported,
                                   std::vector<PredictionRecord>* records = nullptr);

// Summary generation scored with BLEU-1 against the leading-words title.
EvalReport evaluate_summaries(const Model& model, const LmParams& lm,
                              const TextAttributedGraph& graph, int targets_per_way,
                              const std::vector<uint64_t>& seeds,
                              const std::vector<int64_t>& excluded,
                              const std::string& task_text, const TemplateSet& templates,
                              int max_new_tokens, int shots_reported, int title_len = 4,
                              std::vector<PredictionRecord>* records = nullptr);

// Token count of an ICL-style baseline prompt carrying all K examples' text
// and structure descriptions. Comparison-only; never used for inference.
int icl_prompt_length(const FewShotExampleSet& examples, const TextAttributedGraph& graph,
                      const std::string& task_text, const PromptTemplate& classify_tpl,
                      const Vocabulary& vocab);

// Query token/slot count for one target under this artifact's prompt format
// (independent of the number of adaptation examples).
int query_length(const TextAttributedGraph& graph, int64_t target, const ModelConfig& cfg,
                 const std::string& task_text, const PromptTemplate& tpl,
                 const Vocabulary& vocab, uint64_t subgraph_seed);

void write_eval_report_csv(const std::string& path, const EvalReport& report);
std::string format_eval_report(const EvalReport& report);
void write_predictions_jsonl(const std::string& path,
                             const std::vector<PredictionRecord>& records);

}  // namespace graphlm
