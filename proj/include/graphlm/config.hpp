#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "graphlm/model.hpp"
#include "graphlm/tag.hpp"
#include "graphlm/train.hpp"

namespace graphlm {

struct DataConfig {
    std::string nodes_file;
    std::string edges_file;
    bool has_synthetic = false;
    SyntheticTagSpec synthetic;
    // Side graphs whose texts and class names join the bootstrap corpus.
    std::vector<std::pair<std::string, std::string>> extra_graphs;
};

struct BootstrapSection {
    double lr = 1e-3;
    int max_epochs = 10;
    int max_steps = 1000000;
    double plateau_tol = 1e-3;
    int classify_examples = 100;
    int link_examples = 40;
    int summarize_examples = 30;
    int choice_lines = 40;
    int pointer_lines = 160;
};

struct AdaptSection {
    int shots = 5;
    std::string task = "classify";  // or "summarize"
    std::string task_text;          // empty -> derived from the task + class names
};

struct EvalSection {
    int ways = 0;  // 0 -> all labeled classes
    int targets_per_way = 20;
    std::vector<uint64_t> seeds = {1, 2, 3};
    int max_new_tokens_classify = 16;
    int max_new_tokens_summary = 64;
    int title_len = 4;
};

// One config document drives every subcommand. Every field has a default;
// the seed is mandatory; unknown keys are rejected with their path.
struct RunConfig {
    uint64_t seed = 0;
    std::string templates_dir;
    DataConfig data;
    ModelConfig model;
    TrainConfig train;
    BootstrapSection bootstrap;
    AdaptSection adapt;
    EvalSection eval;

    static RunConfig from_json_text(const std::string& text);
    static RunConfig from_file(const std::string& path);
    std::string to_json_text() const;  // resolved config echo
};

}  // namespace graphlm
