#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace cvid {

// splitmix64 finalizer; the backbone of every seeded stream in the library.
inline uint64_t mix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// FNV-1a over bytes. Stable token hashing for the text encoder.
inline uint64_t hash64(std::string_view s) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Counter-based generator: the value at draw n is a pure function of
// (key, n), so identical streams can be re-created from any point and
// results do not depend on which worker drew first.
class CounterRng {
public:
    explicit CounterRng(uint64_t key) : key_(key) {}

    static uint64_t derive(uint64_t key, uint64_t lane) {
        return mix64(key ^ mix64(lane));
    }

    uint64_t next_u64() { return mix64(key_ ^ mix64(counter_++)); }

    // uniform in (0, 1]; never 0 so log() below is safe
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }

    // Box-Muller; the second value of each pair is cached.
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

private:
    uint64_t key_;
    uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace cvid
