#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace rbmle {

/// 64-bit FNV-1a.
constexpr std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

constexpr std::uint64_t splitmix_finalize(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Counter-based generator: draw i of stream (seed, purpose) is a fixed hash of
/// (seed, purpose, i), so streams are independent of evaluation order.
class Rng {
public:
    Rng(std::uint64_t seed, std::string_view purpose)
        : key_(splitmix_finalize(seed + 0x9e3779b97f4a7c15ULL) ^ splitmix_finalize(fnv1a(purpose))) {}

    std::uint64_t next() { return splitmix_finalize(key_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

    /// Uniform on [0,1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Index drawn from a probability vector by inversion; zero-weight entries are never returned.
    std::size_t categorical(std::span<const double> probs) {
        const double r = uniform();
        double acc = 0.0;
        std::size_t last = 0;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            if (probs[i] <= 0.0) continue;
            last = i;
            acc += probs[i];
            if (r < acc) return i;
        }
        return last;
    }

    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace rbmle
