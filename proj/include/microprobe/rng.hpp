#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace microprobe {

// Deterministic seeded RNG with explicit stream splitting. Every stochastic
// component draws from a child stream derived from (master seed, operation
// label, invocation index), so adding components never perturbs existing
// draws and reruns are bit-identical across platforms. The engine is
// xoshiro256**, seeded through splitmix64; bounded integers use rejection
// sampling and normals use Box-Muller, so no draw depends on the standard
// library's distribution internals.

uint64_t splitmix64_next(uint64_t& state);

uint64_t fnv1a64(std::string_view data);

// child = mix(mix(master ^ fnv1a64(label)) ^ index)
uint64_t derive_seed(uint64_t master, std::string_view label, uint64_t index = 0);

class Rng {
  public:
    explicit Rng(uint64_t seed);

    uint64_t next_u64();

    // Uniform in [0, 1).
    double uniform();

    // Uniform in {0, ..., bound-1}; bound must be > 0.
    uint64_t uniform_below(uint64_t bound);

    bool bernoulli(double p);

    double normal(double mean, double stddev);

    // Fisher-Yates.
    template <typename T>
    void shuffle(std::vector<T>& items) {
        if (items.size() < 2) return;
        for (std::size_t i = items.size() - 1; i > 0; --i) {
            const std::size_t j = static_cast<std::size_t>(uniform_below(i + 1));
            using std::swap;
            swap(items[i], items[j]);
        }
    }

    // First n entries of a Fisher-Yates pass over {0, ..., total-1}:
    // a uniform sample without replacement, in draw order.
    std::vector<std::size_t> sample_indices(std::size_t total, std::size_t n);

  private:
    uint64_t s_[4];
};

}  // namespace microprobe
