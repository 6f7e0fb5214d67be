#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace faae {

// xoshiro256** (Blackman & Vigna) seeded through splitmix64. All randomness in
// the library flows through this generator so that a seed fixes every stream
// bit-for-bit on any platform; normals come from Box-Muller on top of it.
class Rng {
public:
    using State = std::array<std::uint64_t, 4>;

    explicit Rng(std::uint64_t seed = 0);

    std::uint64_t next_u64();
    // Uniform on [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    // Unbiased integer on [0, bound); bound must be positive.
    std::uint64_t below(std::uint64_t bound);
    // Standard normal via the cosine branch of Box-Muller (two uniforms per draw).
    double normal();

    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

    const State& state() const { return state_; }
    void set_state(const State& s) { state_ = s; }

    bool operator==(const Rng& other) const { return state_ == other.state_; }

private:
    State state_;
};

}  // namespace faae
