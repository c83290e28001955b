#pragma once

#include <cstdint>
#include <vector>

namespace prefsim {

// xorshift64* generator (Marsaglia xorshift, Vigna's star multiplier).
// Every random decision in the simulator flows through this generator so
// that a single 64-bit seed fully determines a run, on any platform.
//
// Update rule (state x, 64-bit wrapping arithmetic):
//   x ^= x >> 12;  x ^= x << 25;  x ^= x >> 27;  output = x * 0x2545F4914F6CDD1D
//
// Derived draws, kept deliberately trivial so other implementations can
// reproduce them bit for bit:
//   next_below(n) = next() % n
//   next_bit()    = next() >> 63
//   fork()        = new generator seeded with next()
// A zero seed is remapped to 0x9E3779B97F4A7C15 (xorshift state must be
// nonzero).
class Xorshift64Star {
  public:
    explicit Xorshift64Star(uint64_t seed)
        : state_(seed != 0 ? seed : 0x9E3779B97F4A7C15ull) {}

    uint64_t next() {
        uint64_t x = state_;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        state_ = x;
        return x * 0x2545F4914F6CDD1Dull;
    }

    uint64_t next_below(uint64_t n) { return next() % n; }

    bool next_bit() { return (next() >> 63) != 0; }

    // Independent child stream; drawing from the child does not disturb the
    // parent beyond the single seeding draw.
    Xorshift64Star fork() { return Xorshift64Star(next()); }

    // Fisher-Yates, iterating from the last element down, using next_below.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        if (v.size() < 2) return;
        for (size_t i = v.size() - 1; i > 0; --i) {
            size_t j = static_cast<size_t>(next_below(i + 1));
            std::swap(v[i], v[j]);
        }
    }

  private:
    uint64_t state_;
};

} // namespace prefsim
