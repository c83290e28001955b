#pragma once

#include <vector>

#include "prefsim/errors.hpp"

namespace prefsim {

// Which logical cores share one prefetcher (and one cache) instance.
enum class DomainGranularity {
    per_physical_core, // SMT siblings of each physical core form a domain
    global,            // all logical cores in a single domain
};

// Immutable machine description. Logical core ids are dense and
// physical-major: core p, SMT way w  ->  id p * smt_ways + w.
class Topology {
  public:
    static Topology build(int physical_cores, int smt_ways,
                          DomainGranularity granularity) {
        if (physical_cores < 1 || smt_ways < 1)
            throw ConfigError("topology: core counts must be >= 1");
        Topology t;
        t.physical_cores_ = physical_cores;
        t.smt_ways_ = smt_ways;
        t.granularity_ = granularity;
        int logical = physical_cores * smt_ways;
        t.domain_of_.resize(logical);
        if (granularity == DomainGranularity::global) {
            t.domains_.resize(1);
            for (int c = 0; c < logical; ++c) {
                t.domains_[0].push_back(c);
                t.domain_of_[c] = 0;
            }
        } else {
            t.domains_.resize(physical_cores);
            for (int p = 0; p < physical_cores; ++p) {
                for (int w = 0; w < smt_ways; ++w) {
                    int c = p * smt_ways + w;
                    t.domains_[p].push_back(c);
                    t.domain_of_[c] = p;
                }
            }
        }
        return t;
    }

    int physical_cores() const { return physical_cores_; }
    int smt_ways() const { return smt_ways_; }
    int logical_cores() const { return physical_cores_ * smt_ways_; }
    int domain_count() const { return static_cast<int>(domains_.size()); }
    DomainGranularity granularity() const { return granularity_; }

    int domain_of(int core) const {
        if (core < 0 || core >= logical_cores())
            throw ConfigError("topology: invalid logical core id");
        return domain_of_[core];
    }

    int physical_of(int core) const {
        if (core < 0 || core >= logical_cores())
            throw ConfigError("topology: invalid logical core id");
        return core / smt_ways_;
    }

    const std::vector<std::vector<int>>& domains() const { return domains_; }
    const std::vector<int>& domain_cores(int d) const { return domains_.at(d); }

  private:
    Topology() = default;
    int physical_cores_ = 1;
    int smt_ways_ = 1;
    DomainGranularity granularity_ = DomainGranularity::per_physical_core;
    std::vector<std::vector<int>> domains_;
    std::vector<int> domain_of_;
};

} // namespace prefsim
