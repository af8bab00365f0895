#pragma once

#include <cstdint>
#include <string_view>

namespace lscggm {

/// Counter-based generator: output k of stream `key` is splitmix64(key + k·φ),
/// with φ the 64-bit golden-ratio increment. Streams are addressed by
/// hashing (seed, label, index), so every (design, replicate, purpose)
/// triple gets an independent, reproducible sequence on every platform.
class CounterRng {
  public:
    explicit CounterRng(std::uint64_t key) : key_(key) {}

    /// Stream for `label` (e.g. "truth", "data") of replicate `index` under `seed`.
    static CounterRng stream(std::uint64_t seed, std::string_view label, std::uint64_t index = 0);

    std::uint64_t next_u64();
    /// Uniform on (0, 1), 53 bits.
    double uniform();
    double normal();
    /// Student t with 4 degrees of freedom.
    double student_t4();
    /// ±1 with equal probability.
    double sign() { return (next_u64() >> 63) ? 1.0 : -1.0; }
    /// Uniform integer in [0, bound).
    std::uint64_t below(std::uint64_t bound);

    std::uint64_t counter() const { return counter_; }

  private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

} // namespace lscggm
