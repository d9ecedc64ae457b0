#pragma once

#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>

namespace pip {

// Error hierarchy. ShapeError/ConfigError map to CLI exit code 2,
// NumericError to exit code 3.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ShapeError : Error {
    using Error::Error;
};
struct ConfigError : Error {
    using Error::Error;
};
struct NumericError : Error {
    using Error::Error;
};

namespace detail {
inline void format_into(std::ostringstream&) {}
template <typename T, typename... Rest>
void format_into(std::ostringstream& os, const T& v, const Rest&... rest) {
    os << v;
    format_into(os, rest...);
}
}  // namespace detail

template <typename... Args>
std::string format_msg(const Args&... args) {
    std::ostringstream os;
    detail::format_into(os, args...);
    return os.str();
}

template <typename E = ShapeError, typename... Args>
void check(bool cond, const Args&... args) {
    if (!cond) throw E(format_msg(args...));
}

inline int ceil_div(int a, int b) { return (a + b - 1) / b; }

inline bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

inline int64_t lcm64(int64_t a, int64_t b) {
    int64_t x = a, y = b;
    while (y != 0) {
        int64_t t = x % y;
        x = y;
        y = t;
    }
    return a / x * b;
}

// Deterministic, platform-independent PRNG (splitmix64). All randomness in
// the library flows through this so runs reproduce bit-identically from a
// seed regardless of the standard library in use.
class Rng {
   public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    uint32_t next_u32() { return static_cast<uint32_t>(next_u64() >> 32); }

    // Uniform on [0, 1) with 24 bits of mantissa.
    float uniform() { return static_cast<float>(next_u32() >> 8) * (1.0f / 16777216.0f); }

    float uniform(float lo, float hi) { return lo + (hi - lo) * uniform(); }

    float normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        float u1;
        do {
            u1 = uniform();
        } while (u1 <= 1e-12f);
        const float u2 = uniform();
        const float r = std::sqrt(-2.0f * std::log(u1));
        const float a = 6.28318530717958647692f * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    // Knuth's product method, split into chunks so the running product
    // stays representable for large means.
    int poisson(double lambda) {
        int total = 0;
        while (lambda > 30.0) {
            total += poisson_small(30.0);
            lambda -= 30.0;
        }
        return total + poisson_small(lambda);
    }

   private:
    int poisson_small(double lambda) {
        if (lambda <= 0.0) return 0;
        const double limit = std::exp(-lambda);
        double prod = 1.0;
        int k = 0;
        do {
            ++k;
            prod *= static_cast<double>(uniform());
        } while (prod > limit);
        return k - 1;
    }

    uint64_t state_;
    float spare_ = 0.0f;
    bool has_spare_ = false;
};

// Derives independent sub-streams from one master seed (model init,
// degradation, jitter, ... each get their own stream).
inline uint64_t derive_seed(uint64_t master, uint64_t stream) {
    return master * 0x9e3779b97f4a7c15ull + stream * 0xd1b54a32d192ed03ull + 0x2545f4914f6cdd1dull;
}

}  // namespace pip
