#pragma once
#include <cmath>
#include <cstdint>
#include <vector>

namespace graphlm {

inline uint64_t splitmix64_step(uint64_t& state) {
    state += 0x9E3779B97F4A7C15ull;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Stable seed derivation for independent sub-streams.
inline uint64_t derive_seed(uint64_t base, uint64_t tag1, uint64_t tag2 = 0) {
    uint64_t s = base + 0x9E3779B97F4A7C15ull * (tag1 + 1) + 0xC2B2AE3D27D4EB4Full * (tag2 + 1);
    return splitmix64_step(s);
}

// Deterministic PRNG producing identical streams on every platform and
// standard library. All randomness in the project goes through this type;
// std::uniform_*_distribution is implementation-defined and never used.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next() { return splitmix64_step(state_); }

    // Unbiased integer in [0, n), n > 0. Lemire's multiply-shift rejection.
    uint64_t below(uint64_t n) {
        __uint128_t m = static_cast<__uint128_t>(next()) * n;
        uint64_t lo = static_cast<uint64_t>(m);
        if (lo < n) {
            uint64_t t = (0 - n) % n;
            while (lo < t) {
                m = static_cast<__uint128_t>(next()) * n;
                lo = static_cast<uint64_t>(m);
            }
        }
        return static_cast<uint64_t>(m >> 64);
    }

    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform01();
        if (u1 < 1e-300) u1 = 1e-300;
        double u2 = uniform01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double t = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(t);
        have_spare_ = true;
        return r * std::cos(t);
    }

    // Independent child stream; does not advance this generator.
    Rng fork(uint64_t tag) const {
        uint64_t s = state_ ^ (0xD1B54A32D192ED03ull * (tag + 1));
        splitmix64_step(s);
        return Rng(s);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // Uniform k-subset of {0..n-1} in ascending order (selection sampling).
    std::vector<int> sample_indices(int n, int k) {
        std::vector<int> out;
        out.reserve(static_cast<size_t>(k));
        int need = k;
        for (int i = 0; i < n && need > 0; ++i) {
            if (below(static_cast<uint64_t>(n - i)) < static_cast<uint64_t>(need)) {
                out.push_back(i);
                --need;
            }
        }
        return out;
    }

private:
    uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace graphlm
