#pragma once
#include "graphlm/autodiff.hpp"
#include "graphlm/matrix.hpp"
#include "graphlm/rng.hpp"

namespace graphlm {

// Affine bridge from gate-output space into the language model's embedding
// space. Frozen after pre-training.
struct ProjectorParams {
    Matrix w;  // [lm_dim x g_out]
    Matrix b;  // [1 x lm_dim]

    static ProjectorParams init(int lm_dim, int g_out, Rng& rng);
    void validate(int g_out, int lm_dim) const;
};

// x_gate: [n x g_out] -> [n x lm_dim].
Var project(Tape& tape, Var x_gate, Var w, Var b);

}  // namespace graphlm
