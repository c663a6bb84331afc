#pragma once
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>

#include "graphlm/matrix.hpp"

namespace graphlm {

// FNV-1a 64-bit. Not cryptographic; used for change detection and manifests.
class Fnv1a {
public:
    void update(const void* data, size_t len) {
        const unsigned char* p = static_cast<const unsigned char*>(data);
        for (size_t i = 0; i < len; ++i) {
            h_ ^= p[i];
            h_ *= 0x100000001B3ull;
        }
    }
    void update(std::string_view s) { update(s.data(), s.size()); }
    void update_u32(uint32_t v) {
        unsigned char b[4];
        for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
        update(b, 4);
    }
    void update_u64(uint64_t v) {
        unsigned char b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
        update(b, 8);
    }
    void update(const Matrix& m) {
        update_u32(static_cast<uint32_t>(m.rows));
        update_u32(static_cast<uint32_t>(m.cols));
        for (double x : m.a) {
            uint64_t bits;
            std::memcpy(&bits, &x, 8);
            update_u64(bits);
        }
    }
    uint64_t value() const { return h_; }

private:
    uint64_t h_ = 0xCBF29CE484222325ull;
};

inline uint64_t fnv1a64(std::string_view s) {
    Fnv1a f;
    f.update(s);
    return f.value();
}

inline std::string hex64(uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[static_cast<size_t>(i)] = digits[v & 0xF];
        v >>= 4;
    }
    return s;
}

}  // namespace graphlm
