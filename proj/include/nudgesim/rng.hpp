#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string_view>

namespace nudgesim::rng {

/// Finalizer from the splitmix64 generator. Used both as a seed scrambler
/// and as the mixing step when deriving sub-stream keys.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Purpose tags for sub-stream derivation. Every random draw in a run comes
/// from a stream keyed by (master seed, purpose, a, b), so users and days can
/// be simulated in any order (or in parallel) without changing the output.
enum class Stream : std::uint64_t {
    population = 1,
    plan = 2,
    walk = 3,
    gaps = 4,
    nudge = 5,
    policy = 6,
};

constexpr std::uint64_t derive_key(std::uint64_t master, Stream purpose,
                                   std::uint64_t a = 0, std::uint64_t b = 0) {
    std::uint64_t h = splitmix64(master ^ 0x6e756467656d7378ULL);
    h = splitmix64(h ^ static_cast<std::uint64_t>(purpose));
    h = splitmix64(h ^ a);
    h = splitmix64(h ^ b);
    return h;
}

/// xoshiro256++ stream seeded from a single 64-bit key via splitmix64.
/// Self-contained so that generated data does not depend on the C++
/// standard library's distribution implementations.
class RngStream {
public:
    explicit RngStream(std::uint64_t key) {
        std::uint64_t s = key;
        for (auto& w : state_) {
            s = splitmix64(s);
            w = s;
        }
    }

    RngStream(std::uint64_t master, Stream purpose, std::uint64_t a = 0,
              std::uint64_t b = 0)
        : RngStream(derive_key(master, purpose, a, b)) {}

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform double in (0, 1), never exactly 0 or 1.
    double uniform_open() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    bool bernoulli(double p) { return uniform() < p; }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
    }

    /// Poisson via unit-rate arrival counting: exact for any lambda and
    /// monotone in lambda for a fixed stream, which keeps paired runs
    /// (same seed, different rates) coupled.
    std::uint64_t poisson(double lambda) {
        if (lambda <= 0.0) return 0;
        std::uint64_t count = 0;
        double t = -std::log(uniform_open());
        while (t <= lambda) {
            ++count;
            t += -std::log(uniform_open());
        }
        return count;
    }

    /// Standard normal, Box-Muller with fixed two-draw consumption.
    double normal() {
        const double u1 = uniform_open();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

    double lognormal(double mu, double sigma) { return std::exp(mu + sigma * normal()); }

    /// Gamma(shape, 1) via Marsaglia-Tsang; shape < 1 handled by boosting.
    double gamma(double shape) {
        if (shape < 1.0) {
            const double u = uniform_open();
            return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x = normal();
            double v = 1.0 + c * x;
            if (v <= 0.0) continue;
            v = v * v * v;
            const double u = uniform_open();
            if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) {
                return d * v;
            }
        }
    }

    double beta(double a, double b) {
        const double x = gamma(a);
        const double y = gamma(b);
        return x / (x + y);
    }

    /// Index drawn from a discrete distribution given as probabilities.
    /// The final category absorbs any floating-point remainder.
    std::size_t categorical(std::span<const double> probs) {
        const double u = uniform();
        double acc = 0.0;
        for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
            acc += probs[i];
            if (u < acc) return i;
        }
        return probs.empty() ? 0 : probs.size() - 1;
    }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t state_[4];
};

}  // namespace nudgesim::rng
