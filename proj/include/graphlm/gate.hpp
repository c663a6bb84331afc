#pragma once
#include <string>

#include "graphlm/autodiff.hpp"
#include "graphlm/matrix.hpp"
#include "graphlm/rng.hpp"

namespace graphlm {

// Channel-masking adapter: a task-related branch and a task-invariant branch,
// each a linear map followed by an elementwise mask, concatenated and re-mixed
// by an aggregation matrix. The invariant branch is frozen after pre-training;
// the task branch and the mixer are the adaptation surface.
struct GateParams {
    Matrix w_inv;  // [g x g]
    Matrix m_inv;  // [1 x g]
    Matrix w_rel;  // [g x g]
    Matrix m_rel;  // [1 x g]
    Matrix w_agg;  // [g_out x 2g]

    static GateParams init(int g, int g_out, Rng& rng);  // m_inv starts all-ones
    void validate() const;
    int in_dim() const { return w_rel.cols; }
    int out_dim() const { return w_agg.rows; }
};

// Hashing-trick task-text encoder: a signed hashed bag-of-words of the task
// text (L2-normalized) through a learned projection. Trained during
// pre-training, frozen afterwards; only the resulting mask values are tuned.
struct TaskTextEncoderParams {
    Matrix projection;  // [g x bag_dim]

    static TaskTextEncoderParams init(int g, int bag_dim, Rng& rng);
    int bag_dim() const { return projection.cols; }
    int out_dim() const { return projection.rows; }
};

// Hash seed for task-text bags; fixed so stored masks stay comparable.
inline constexpr uint64_t kTaskBagSeed = 0x7461736bull;

// Mask init from task text, as a [1 x g] row. Text with no words falls back
// to the constant 0.01 vector so the branch is never fully closed at init.
Matrix encode_task_text(const std::string& task_text, const TaskTextEncoderParams& params);

// Same computation on a tape, with gradients flowing into the projection.
Var encode_task_text_var(Tape& tape, const std::string& task_text, Var projection);

// x_hop: [n x g] -> [n x g_out].
Var gate_forward(Tape& tape, Var x_hop, Var w_rel, Var m_rel, Var w_inv, Var m_inv, Var w_agg);

}  // namespace graphlm
