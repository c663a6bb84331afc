#include "graphlm/textproc.hpp"

#include <cmath>

#include "graphlm/errors.hpp"

namespace graphlm {

static bool word_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9');
}

std::vector<std::string> split_words(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : text) {
        char c = ch;
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
        if (word_char(c)) {
            cur.push_back(c);
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

uint64_t token_hash(std::string_view token, uint64_t seed) {
    uint64_t h = 0xCBF29CE484222325ull ^ (seed * 0x9E3779B97F4A7C15ull);
    for (unsigned char c : token) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    return h;
}

std::vector<double> hashed_bag(const std::vector<std::string>& words, int dim, uint64_t seed) {
    if (dim < 1) throw ConfigError("hashed_bag: dim must be >= 1");
    std::vector<double> v(static_cast<size_t>(dim), 0.0);
    for (const auto& w : words) {
        uint64_t h = token_hash(w, seed);
        size_t bucket = static_cast<size_t>(h % static_cast<uint64_t>(dim));
        double sign = ((h >> 32) & 1ull) ? 1.0 : -1.0;
        v[bucket] += sign;
    }
    return v;
}

std::vector<double> featurize_text(std::string_view text, int dim, uint64_t seed) {
    auto v = hashed_bag(split_words(text), dim, seed);
    double norm2 = 0.0;
    for (double x : v) norm2 += x * x;
    if (norm2 > 0.0) {
        double inv = 1.0 / std::sqrt(norm2);
        for (double& x : v) x *= inv;
    }
    return v;
}

}  // namespace graphlm
