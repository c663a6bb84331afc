#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "graphlm/checkpoint.hpp"
#include "graphlm/lm.hpp"
#include "graphlm/model.hpp"
#include "graphlm/tag.hpp"
#include "graphlm/templates.hpp"

namespace graphlm {

struct TrainConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    int epochs_match = 2;
    int epochs_classify = 2;
    int epochs_link = 1;
    int batch_size = 1;
    int link_pairs_per_epoch = 100;
    double weight_match = 1.0;
    double weight_classify = 1.0;
    double weight_link = 1.0;
    double adapt_lr = 1e-2;
    int adapt_epochs = 40;
    bool include_hop_encodings = true;
    uint64_t seed = 1;

    void validate() const;
};

struct LossRecord {
    int64_t step = 0;
    std::string stage;
    double loss = 0.0;
};
using LossLog = std::vector<LossRecord>;
void write_loss_log_csv(const std::string& path, const LossLog& log);

// Default task texts per stage; classification lists the class names so the
// task-related mask sees them.
std::string classification_task_text(const std::vector<std::string>& class_names);
std::string summary_task_text();
std::string link_task_text();
std::string node_match_task_text();

// Alignment loss between projected node tokens and frozen text encodings:
// both sides are L2-normalized per member, then
//   mean_u [ exp(-gamma * cos(x_u, c_u)) + ||x_u - c_u||^2 ].
// A zero-norm vector normalizes to zero (cosine contribution 0).
Var node_matching_loss_var(Tape& tape, Var projected, const Matrix& text_encodings, double gamma);
double node_matching_loss(const Matrix& projected, const Matrix& text_encodings, double gamma);

struct PretrainResult {
    Model model;
    LossLog log;
    uint64_t lm_digest = 0;
};

// Three sequential stages over per-target-node steps: node matching, then
// node classification, then link prediction. Every non-LM tensor trains; the
// LM stays frozen (asserted by digest).
PretrainResult pretrain(const ModelConfig& model_cfg, uint64_t model_seed,
                        const std::vector<const TextAttributedGraph*>& graphs,
                        const LmParams& lm, const TrainConfig& cfg,
                        const TemplateSet& templates);

struct AdaptResult {
    AdapterCheckpoint adapter;
    Model adapted;  // base with the tunable tensors updated
    LossLog log;
};

// Few-shot adaptation: the task-related mask is re-initialized from the task
// text, then only the declared tunable set trains on answer cross-entropy
// over the examples. task_kind is "classify" or "summarize".
AdaptResult adapt(const Model& base, uint64_t base_digest, const TextAttributedGraph& target,
                  const FewShotExampleSet& examples, const std::string& task_text,
                  const std::string& task_kind, const LmParams& lm, const TrainConfig& cfg,
                  const TemplateSet& templates);

struct ParamCountReport {
    std::vector<std::pair<std::string, int64_t>> tunable;  // per tensor
    int64_t tunable_total = 0;
    int64_t pretrain_total = 0;
};

// Pure dims arithmetic; no tensors are allocated.
ParamCountReport count_tunable_parameters(const ModelConfig& cfg, bool include_hop_encodings);

struct GradCheckEntry {
    std::string tensor;
    bool checked = false;  // false: frozen in this mode, no gradient required
    double max_rel_err = 0.0;
};
struct GradCheckReport {
    std::vector<GradCheckEntry> entries;
    double max_rel_err = 0.0;  // over checked entries
};

// Compares analytic gradients against central finite differences (step 1e-5)
// on a small seeded instance. mode: "match" (alignment loss, pre-train
// partition), "answer" (answer cross-entropy, pre-train partition) or
// "adapt" (answer cross-entropy, adaptation partition).
GradCheckReport gradient_check(const std::string& mode, double tolerance, uint64_t seed);

}  // namespace graphlm
