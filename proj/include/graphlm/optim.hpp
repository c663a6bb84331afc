#pragma once
#include <cmath>
#include <map>
#include <string>

#include "graphlm/errors.hpp"
#include "graphlm/matrix.hpp"

namespace graphlm {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Classic Adam with bias correction. State is keyed by tensor name; update
// order follows call order, which callers keep fixed for determinism.
class Adam {
public:
    explicit Adam(AdamConfig cfg) : cfg_(cfg) {
        if (cfg.lr <= 0.0) throw ConfigError("adam: lr must be positive");
    }

    void step(const std::string& name, Matrix& w, const Matrix& g) {
        if (!w.same_shape(g)) throw ConfigError("adam: grad shape mismatch for " + name);
        State& s = states_[name];
        if (s.m.size() == 0) {
            s.m = Matrix(w.rows, w.cols);
            s.v = Matrix(w.rows, w.cols);
        }
        s.t += 1;
        const double bc1 = 1.0 - std::pow(cfg_.beta1, s.t);
        const double bc2 = 1.0 - std::pow(cfg_.beta2, s.t);
        for (size_t i = 0; i < w.size(); ++i) {
            s.m.a[i] = cfg_.beta1 * s.m.a[i] + (1.0 - cfg_.beta1) * g.a[i];
            s.v.a[i] = cfg_.beta2 * s.v.a[i] + (1.0 - cfg_.beta2) * g.a[i] * g.a[i];
            double mhat = s.m.a[i] / bc1;
            double vhat = s.v.a[i] / bc2;
            w.a[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }

private:
    struct State {
        int64_t t = 0;
        Matrix m, v;
    };
    AdamConfig cfg_;
    std::map<std::string, State> states_;
};

}  // namespace graphlm
