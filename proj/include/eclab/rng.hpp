#pragma once

// Deterministic seeded randomness. All sweeps draw through these helpers so a
// (config, seed) pair reproduces byte-identical reports on any platform; the
// standard <random> distributions are implementation-defined and unusable here.

#include <cstdint>
#include <vector>

namespace eclab {

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    // splitmix64 step
    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform in [0, n)
    std::uint64_t below(std::uint64_t n) {
        // rejection sampling, bias-free
        std::uint64_t limit = ~0ULL - ~0ULL % n;
        std::uint64_t x;
        do { x = next(); } while (x >= limit);
        return x % n;
    }

    int range(int lo, int hi) { // inclusive ends
        return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo + 1)));
    }

    double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    Rng fork(std::uint64_t stream) {
        Rng r(state_ ^ (0xd1342543de82ef95ULL * (stream + 1)));
        r.next();
        return r;
    }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
    }

  private:
    std::uint64_t state_;
};

} // namespace eclab
