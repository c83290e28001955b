#pragma once

// Presence oracle for the cache: replays the whole operation history through
// per-set recency lists (front = most recent). Nothing shared with the
// production age-permutation bookkeeping.

#include <cstdint>
#include <vector>

namespace prefsim_test {

enum class CacheOpKind { access, install, flush };

struct CacheOp {
    CacheOpKind kind = CacheOpKind::access;
    uint64_t addr = 0;
};

class ReferenceCache {
  public:
    ReferenceCache(int sets, int ways, int line_size)
        : sets_(sets), ways_(ways), line_(line_size),
          lists_(static_cast<size_t>(sets)) {}

    // Returns hit/miss for access ops, true for others.
    bool apply(const CacheOp& op) {
        uint64_t tag = op.addr / uint64_t(line_);
        auto& list = lists_[static_cast<size_t>(tag % uint64_t(sets_))];
        auto it = std::find(list.begin(), list.end(), tag);
        switch (op.kind) {
            case CacheOpKind::flush:
                if (it != list.end()) list.erase(it);
                return true;
            case CacheOpKind::access:
            case CacheOpKind::install: {
                bool hit = it != list.end();
                if (hit) list.erase(it);
                list.insert(list.begin(), tag);
                if (static_cast<int>(list.size()) > ways_) list.pop_back();
                return hit;
            }
        }
        return true;
    }

    bool present(uint64_t addr) const {
        uint64_t tag = addr / uint64_t(line_);
        const auto& list = lists_[static_cast<size_t>(tag % uint64_t(sets_))];
        return std::find(list.begin(), list.end(), tag) != list.end();
    }

  private:
    int sets_, ways_, line_;
    std::vector<std::vector<uint64_t>> lists_;
};

} // namespace prefsim_test
