#include "lscggm/rng.hpp"

#include <cmath>
#include <numbers>

namespace lscggm {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBULL;
    x ^= x >> 31;
    return x;
}

CounterRng CounterRng::stream(std::uint64_t seed, std::string_view label, std::uint64_t index) {
    // FNV-1a over the label keeps stream keys stable across compilers.
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (char c : label) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    std::uint64_t key = splitmix64(seed + kGolden);
    key = splitmix64(key ^ h);
    key = splitmix64(key ^ (index * kGolden + 1));
    return CounterRng(key);
}

std::uint64_t CounterRng::next_u64() {
    ++counter_;
    return splitmix64(key_ + counter_ * kGolden);
}

double CounterRng::uniform() {
    // (k + 0.5) / 2^53 never hits 0 or 1.
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double CounterRng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double ang = 2.0 * std::numbers::pi * u2;
    spare_ = rad * std::sin(ang);
    has_spare_ = true;
    return rad * std::cos(ang);
}

double CounterRng::student_t4() {
    // χ²₄ = −2 log(U₁U₂).
    const double z = normal();
    const double chi2 = -2.0 * std::log(uniform() * uniform());
    return z / std::sqrt(chi2 / 4.0);
}

std::uint64_t CounterRng::below(std::uint64_t bound) {
    // Rejection sampling avoids modulo bias.
    const std::uint64_t limit = (~std::uint64_t{0}) - (~std::uint64_t{0}) % bound;
    for (;;) {
        const std::uint64_t x = next_u64();
        if (x < limit)
            return x % bound;
    }
}

} // namespace lscggm
