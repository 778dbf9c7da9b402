#pragma once

#include <cmath>
#include <cstdint>


namespace evspike {

/* splitmix64 step; used to derive independent stream seeds from a master seed.
 * Stream k of master m is seeded with splitmix64(m + (k+1)*0x9E3779B97F4A7C15).
 * This is the documented split function: every ensemble member, MC path and
 * benchmark repetition obtains its generator this way, so results do not
 * depend on scheduling order. */
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    return splitmix64(master + (stream + 1) * 0x9E3779B97F4A7C15ull);
}

/* xoshiro256++ with fixed uniform/normal transforms so that sequences are
 * reproducible independent of the standard library's distribution
 * implementations.  The state is expanded from the seed with splitmix64, so
 * construction is O(1) — ensembles create one generator per realization and
 * mt19937-style seeding was the single largest cost of an event-based run.
 * normal() is Box-Muller with the second value cached. */
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t x = seed;
        for (auto& w : s_) {
            x += 0x9E3779B97F4A7C15ull;
            w = splitmix64(x);
        }
    }

    std::uint64_t bits() {
        auto rotl = [](std::uint64_t v, int k) {
            return (v << k) | (v >> (64 - k));
        };
        std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /* uniform on (0,1); never returns exactly 0 */
    double uniform() {
        return ((bits() >> 11) + 0.5) * 0x1.0p-53;
    }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925287 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    std::uint64_t s_[4];
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace evspike
