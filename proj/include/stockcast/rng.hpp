#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace stockcast {

// Deterministic PRNG with named sub-streams. Each component (hpo, gbdt,
// synth, ...) derives its own stream from the root seed, so adding draws in
// one component never perturbs another's sequence.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(splitmix(seed ^ 0x9e3779b97f4a7c15ull)) {}

    static std::uint64_t derive(std::uint64_t root, std::string_view stream, std::uint64_t index = 0) {
        std::uint64_t h = 0xcbf29ce484222325ull; // FNV-1a
        for (char c : stream) {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001b3ull;
        }
        return splitmix(root ^ splitmix(h ^ splitmix(index)));
    }

    static Rng substream(std::uint64_t root, std::string_view stream, std::uint64_t index = 0) {
        return Rng(derive(root, stream, index));
    }

    std::uint64_t next_u64() {
        // xorshift128+ style step on splitmix-expanded state
        state_ = splitmix(state_);
        return state_;
    }

    // Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform();
    }

    double log_uniform(double lo, double hi) {
        return std::exp(uniform(std::log(lo), std::log(hi)));
    }

    // Uniform integer in [lo, hi] inclusive.
    long uniform_int(long lo, long hi) {
        return lo + static_cast<long>(next_u64() % static_cast<std::uint64_t>(hi - lo + 1));
    }

    double normal(double mean = 0.0, double stddev = 1.0) {
        // Box-Muller; one fresh pair per call keeps the stream stateless.
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
        return mean + stddev * z;
    }

    long poisson(double lambda) {
        if (lambda <= 0.0) return 0;
        if (lambda < 30.0) {
            double limit = std::exp(-lambda);
            double p = 1.0;
            long k = 0;
            do {
                ++k;
                p *= uniform();
            } while (p > limit);
            return k - 1;
        }
        double v = normal(lambda, std::sqrt(lambda));
        return v < 0.0 ? 0 : static_cast<long>(std::llround(v));
    }

    bool bernoulli(double p) {
        return uniform() < p;
    }

private:
    static std::uint64_t splitmix(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ull;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
        return x ^ (x >> 31);
    }

    std::uint64_t state_;
};

} // namespace stockcast
