#include "graphlm/gate.hpp"

#include <cmath>

#include "graphlm/errors.hpp"
#include "graphlm/textproc.hpp"

namespace graphlm {

GateParams GateParams::init(int g, int g_out, Rng& rng) {
    if (g < 1 || g_out < 1) throw ConfigError("gate: dims must be >= 1");
    GateParams p;
    double s = 1.0 / std::sqrt(static_cast<double>(g));
    p.w_inv = Matrix(g, g);
    p.w_rel = Matrix(g, g);
    for (auto& x : p.w_inv.a) x = rng.normal() * s;
    for (auto& x : p.w_rel.a) x = rng.normal() * s;
    p.m_inv = Matrix::full(1, g, 1.0);
    p.m_rel = Matrix::full(1, g, 0.01);
    p.w_agg = Matrix(g_out, 2 * g);
    double sa = 1.0 / std::sqrt(2.0 * g);
    for (auto& x : p.w_agg.a) x = rng.normal() * sa;
    return p;
}

void GateParams::validate() const {
    const int g = w_rel.cols;
    if (w_rel.rows != g || w_inv.rows != g || w_inv.cols != g)
        throw ConfigError("gate: branch weights must be square and equal-sized");
    if (m_rel.rows != 1 || m_rel.cols != g || m_inv.rows != 1 || m_inv.cols != g)
        throw ConfigError("gate: masks must be 1 x g");
    if (w_agg.cols != 2 * g) throw ConfigError("gate: aggregation weight must have 2g columns");
}

TaskTextEncoderParams TaskTextEncoderParams::init(int g, int bag_dim, Rng& rng) {
    if (g < 1 || bag_dim < 1) throw ConfigError("task text encoder: dims must be >= 1");
    TaskTextEncoderParams p;
    p.projection = Matrix(g, bag_dim);
    for (auto& x : p.projection.a) x = rng.normal();
    return p;
}

Matrix encode_task_text(const std::string& task_text, const TaskTextEncoderParams& params) {
    auto bag = featurize_text(task_text, params.bag_dim(), kTaskBagSeed);
    bool all_zero = true;
    for (double x : bag)
        if (x != 0.0) {
            all_zero = false;
            break;
        }
    const int g = params.out_dim();
    if (all_zero) return Matrix::full(1, g, 0.01);
    Matrix out(1, g);
    for (int i = 0; i < g; ++i) {
        double s = 0.0;
        for (int k = 0; k < params.bag_dim(); ++k)
            s += params.projection(i, k) * bag[static_cast<size_t>(k)];
        out(0, i) = s;
    }
    return out;
}

Var encode_task_text_var(Tape& tape, const std::string& task_text, Var projection) {
    const int bag_dim = tape.value(projection).cols;
    const int g = tape.value(projection).rows;
    auto bag = featurize_text(task_text, bag_dim, kTaskBagSeed);
    bool all_zero = true;
    for (double x : bag)
        if (x != 0.0) {
            all_zero = false;
            break;
        }
    if (all_zero) return tape.leaf(Matrix::full(1, g, 0.01), false);
    Matrix bag_row(1, bag_dim);
    for (int k = 0; k < bag_dim; ++k) bag_row(0, k) = bag[static_cast<size_t>(k)];
    return tape.matmul_nt(tape.leaf(std::move(bag_row), false), projection);
}

Var gate_forward(Tape& tape, Var x_hop, Var w_rel, Var m_rel, Var w_inv, Var m_inv, Var w_agg) {
    Var rel = tape.mul_rowvec(tape.matmul_nt(x_hop, w_rel), m_rel);
    Var inv = tape.mul_rowvec(tape.matmul_nt(x_hop, w_inv), m_inv);
    return tape.matmul_nt(tape.concat_cols(rel, inv), w_agg);
}

}  // namespace graphlm
