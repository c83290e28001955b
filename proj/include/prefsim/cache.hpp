#pragma once

#include <cstdint>
#include <vector>

#include "prefsim/errors.hpp"

namespace prefsim {

struct CacheGeometry {
    int sets = 64;
    int ways = 8;
    int line_size = 64; // bytes, power of two
    uint64_t latency_hit = 96;
    uint64_t latency_miss = 340;

    bool operator==(const CacheGeometry&) const = default;

    void validate() const {
        if (sets < 1 || ways < 1)
            throw ConfigError("cache: sets and ways must be >= 1");
        if (line_size < 1 || (line_size & (line_size - 1)) != 0)
            throw ConfigError("cache: line_size must be a power of two");
    }
};

struct ProbeLine {
    uint64_t addr = 0;
    uint64_t latency = 0;
    bool hit = false;
};

struct ProbeResult {
    std::vector<ProbeLine> lines;
};

// Set-associative cache with strict LRU replacement and fixed hit/miss
// latencies. Within a set, ages form a permutation of 0..occupancy-1
// (0 = most recently used).
class Cache {
  public:
    explicit Cache(CacheGeometry g = {}) : geom_(g), sets_(g.sets) {
        geom_.validate();
    }

    const CacheGeometry& geometry() const { return geom_; }

    uint64_t line_of(uint64_t addr) const {
        return addr / static_cast<uint64_t>(geom_.line_size);
    }
    int set_of(uint64_t addr) const {
        return static_cast<int>(line_of(addr) % static_cast<uint64_t>(geom_.sets));
    }

    // Demand load: returns the latency and installs/refreshes the line.
    uint64_t access(uint64_t addr) {
        bool was_hit = touch_or_install(addr);
        return was_hit ? geom_.latency_hit : geom_.latency_miss;
    }

    // Prefetch fill: same cache effect as access, no latency reported.
    void install(uint64_t addr) { touch_or_install(addr); }

    void flush(uint64_t addr) {
        auto& set = sets_[set_of(addr)];
        uint64_t tag = line_of(addr);
        for (size_t i = 0; i < set.size(); ++i) {
            if (set[i].tag == tag) {
                int removed_age = set[i].age;
                set.erase(set.begin() + static_cast<long>(i));
                for (auto& l : set)
                    if (l.age > removed_age) --l.age;
                return;
            }
        }
    }

    bool contains(uint64_t addr) const {
        const auto& set = sets_[set_of(addr)];
        uint64_t tag = line_of(addr);
        for (const auto& l : set)
            if (l.tag == tag) return true;
        return false;
    }

    // Timing probe over a list of lines. Probing reloads, so it installs.
    ProbeResult probe(const std::vector<uint64_t>& addrs) {
        ProbeResult r;
        r.lines.reserve(addrs.size());
        for (uint64_t a : addrs) {
            uint64_t lat = access(a);
            r.lines.push_back({a, lat, lat == geom_.latency_hit});
        }
        return r;
    }

    bool operator==(const Cache& other) const {
        return geom_ == other.geom_ && sets_ == other.sets_;
    }

  private:
    struct Line {
        uint64_t tag = 0;
        int age = 0;
        bool operator==(const Line&) const = default;
    };

    // Returns true on hit.
    bool touch_or_install(uint64_t addr) {
        auto& set = sets_[set_of(addr)];
        uint64_t tag = line_of(addr);
        for (auto& l : set) {
            if (l.tag == tag) {
                int old_age = l.age;
                for (auto& m : set)
                    if (m.age < old_age) ++m.age;
                l.age = 0;
                return true;
            }
        }
        if (static_cast<int>(set.size()) == geom_.ways) {
            // evict the LRU way (maximal age)
            for (size_t i = 0; i < set.size(); ++i) {
                if (set[i].age == geom_.ways - 1) {
                    set.erase(set.begin() + static_cast<long>(i));
                    break;
                }
            }
        }
        for (auto& m : set) ++m.age;
        set.push_back({tag, 0});
        return false;
    }

    CacheGeometry geom_;
    std::vector<std::vector<Line>> sets_;
};

// White-box eviction set: `ways` distinct addresses that map to the target's
// set without sharing its line. Members step by sets*line_size, so they keep
// the set index and change the tag.
inline std::vector<uint64_t> build_eviction_set(const CacheGeometry& g,
                                                uint64_t target) {
    g.validate();
    std::vector<uint64_t> out;
    out.reserve(static_cast<size_t>(g.ways));
    uint64_t set_stride =
        static_cast<uint64_t>(g.sets) * static_cast<uint64_t>(g.line_size);
    for (int k = 1; k <= g.ways; ++k)
        out.push_back(target + static_cast<uint64_t>(k) * set_stride);
    return out;
}

} // namespace prefsim
