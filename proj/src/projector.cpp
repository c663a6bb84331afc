#include "graphlm/projector.hpp"

#include <cmath>

#include "graphlm/errors.hpp"

namespace graphlm {

ProjectorParams ProjectorParams::init(int lm_dim, int g_out, Rng& rng) {
    if (lm_dim < 1 || g_out < 1) throw ConfigError("projector: dims must be >= 1");
    ProjectorParams p;
    p.w = Matrix(lm_dim, g_out);
    double s = 1.0 / std::sqrt(static_cast<double>(g_out));
    for (auto& x : p.w.a) x = rng.normal() * s;
    p.b = Matrix(1, lm_dim);
    return p;
}

void ProjectorParams::validate(int g_out, int lm_dim) const {
    if (w.rows != lm_dim || w.cols != g_out)
        throw ConfigError("projector: weight shape does not match (lm_dim x g_out)");
    if (b.rows != 1 || b.cols != lm_dim)
        throw ConfigError("projector: bias must be 1 x lm_dim");
}

Var project(Tape& tape, Var x_gate, Var w, Var b) {
    return tape.add_rowvec(tape.matmul_nt(x_gate, w), b);
}

}  // namespace graphlm
