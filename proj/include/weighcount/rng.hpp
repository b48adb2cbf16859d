#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace weigh {

// mt19937_64 with hand-written conversions so draws do not depend on the standard
// library's distribution implementations. State round-trips through a string.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    // Uniform in [0, 1) with 53 random bits.
    double uniform();
    // Uniform in [0, n) without modulo bias.
    std::uint64_t uniform_int(std::uint64_t n);
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    // Standard normal (Box-Muller, one value per call).
    double normal();

    std::string state() const;
    void set_state(const std::string& s);

    friend bool operator==(const Rng& a, const Rng& b) { return a.engine_ == b.engine_; }

private:
    std::mt19937_64 engine_;
};

// Derives an independent stream seed from a base seed and a tag.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag);

}  // namespace weigh
