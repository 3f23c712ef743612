#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace pathqa {

// mt19937_64 with fixed output transforms. The standard distributions are
// implementation-defined, so uniform doubles, bounded ints and shuffles are
// derived from the raw engine output directly; the same seed yields the same
// stream on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    // [0, 1)
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Unbiased integer in [0, n), n >= 1, via rejection sampling.
    std::uint64_t below(std::uint64_t n) {
        if (n <= 1) return 0;
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t x;
        do {
            x = next();
        } while (x >= limit);
        return x % n;
    }

    bool coin() { return (next() & 1u) != 0; }

    // Fisher-Yates.
    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}
}  // namespace detail

// Stable seed derivation: one root seed fans out to per-stage streams.
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view label) {
    std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a over the label
    for (char c : label) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ull;
    }
    return detail::splitmix64(root ^ h);
}

}  // namespace pathqa
