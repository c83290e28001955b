#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "prefsim/errors.hpp"

namespace prefsim {

// One observed load. `value` is the word stored at vaddr when the program
// declared memory contents (only the pointer-scanning model cares).
struct MemoryAccess {
    uint64_t pc = 0;
    uint64_t vaddr = 0;
    std::optional<uint64_t> value;
    int core = 0;
    int task = 0;
};

enum class PrefetchCause { stride, sms_replay, dmp_deref };

struct PrefetchRequest {
    uint64_t target = 0;
    PrefetchCause cause = PrefetchCause::stride;
    int origin_task = 0;

    bool operator==(const PrefetchRequest&) const = default;
};

// ---------------------------------------------------------------------------
// IP-stride prefetcher.
//
// Entries are keyed by the low 8 bits of the load instruction address, so
// loads from different contexts can collide on one entry. Per entry: last
// address, current stride, 2-bit saturating confidence. A tag miss allocates
// (LRU victim when full). On a tag hit the incoming delta either matches the
// stored stride (confidence saturating-increments) or rewrites it
// (confidence decrements toward 0). The first hit after allocation learns the
// stride and counts as a match; that is what makes a fresh constant-stride
// walk emit its first request on the third access. Whenever post-update
// confidence reaches the threshold, one request per degree step is emitted
// at vaddr + k*stride.
// ---------------------------------------------------------------------------

struct StrideConfig {
    int capacity = 16;
    int confidence_threshold = 2;
    int confidence_max = 3;
    int degree = 1;
    int line_size = 64;
    bool clear_on_disable = false;

    bool operator==(const StrideConfig&) const = default;
};

class StridePrefetcher {
  public:
    explicit StridePrefetcher(StrideConfig cfg = {}) : cfg_(cfg) {
        if (cfg_.capacity < 1) throw ConfigError("stride: capacity must be >= 1");
    }

    std::vector<PrefetchRequest> observe(const MemoryAccess& acc) {
        if (!enabled_) return {};
        ++use_clock_;
        uint8_t tag = static_cast<uint8_t>(acc.pc & 0xFF);
        Entry* e = find(tag);
        if (e == nullptr) {
            if (static_cast<int>(entries_.size()) == cfg_.capacity) evict_lru();
            entries_.push_back({tag, acc.vaddr, 0, false, 0, use_clock_});
            return {};
        }
        int64_t delta = static_cast<int64_t>(acc.vaddr) -
                        static_cast<int64_t>(e->last_addr);
        if (!e->has_stride || delta == e->stride) {
            e->stride = delta;
            e->has_stride = true;
            e->confidence = std::min(e->confidence + 1, cfg_.confidence_max);
        } else {
            e->stride = delta;
            e->confidence = std::max(e->confidence - 1, 0);
        }
        e->last_addr = acc.vaddr;
        e->last_use = use_clock_;

        std::vector<PrefetchRequest> out;
        if (e->confidence >= cfg_.confidence_threshold && e->stride != 0) {
            for (int k = 1; k <= cfg_.degree; ++k) {
                uint64_t target = static_cast<uint64_t>(
                    static_cast<int64_t>(acc.vaddr) + e->stride * k);
                if (!same_line(target, acc.vaddr))
                    out.push_back({target, PrefetchCause::stride, acc.task});
            }
        }
        return out;
    }

    void set_enabled(bool on) {
        if (!on && cfg_.clear_on_disable) entries_.clear();
        enabled_ = on;
    }
    bool enabled() const { return enabled_; }

    void reset() { entries_.clear(); }

    const StrideConfig& config() const { return cfg_; }
    size_t table_size() const { return entries_.size(); }

    bool operator==(const StridePrefetcher&) const = default;

  private:
    struct Entry {
        uint8_t tag = 0;
        uint64_t last_addr = 0;
        int64_t stride = 0;
        bool has_stride = false;
        int confidence = 0;
        uint64_t last_use = 0;

        bool operator==(const Entry&) const = default;
    };

    Entry* find(uint8_t tag) {
        for (auto& e : entries_)
            if (e.tag == tag) return &e;
        return nullptr;
    }

    void evict_lru() {
        size_t victim = 0;
        for (size_t i = 1; i < entries_.size(); ++i)
            if (entries_[i].last_use < entries_[victim].last_use) victim = i;
        entries_.erase(entries_.begin() + static_cast<long>(victim));
    }

    bool same_line(uint64_t a, uint64_t b) const {
        uint64_t ls = static_cast<uint64_t>(cfg_.line_size);
        return a / ls == b / ls;
    }

    StrideConfig cfg_;
    std::vector<Entry> entries_;
    uint64_t use_clock_ = 0;
    bool enabled_ = true;
};

// ---------------------------------------------------------------------------
// Spatial-pattern (SMS-style) prefetcher.
//
// While a task works inside one region the accessed line offsets accumulate
// in a training record (the trigger line itself is excluded from the
// pattern). Leaving the region commits the record into a table keyed by the
// trigger offset. An access that opens a different region and matches a
// committed trigger offset replays the stored pattern into the new region.
// ---------------------------------------------------------------------------

struct SmsConfig {
    int region_size = 1024; // bytes, power of two
    int line_size = 64;
    int capacity = 16;
    bool clear_on_disable = false;

    bool operator==(const SmsConfig&) const = default;
};

class SmsPrefetcher {
  public:
    explicit SmsPrefetcher(SmsConfig cfg = {}) : cfg_(cfg) {
        if (cfg_.region_size < cfg_.line_size ||
            (cfg_.region_size & (cfg_.region_size - 1)) != 0)
            throw ConfigError("sms: region_size must be a power of two >= line_size");
        if (cfg_.region_size / cfg_.line_size > 64)
            throw ConfigError("sms: at most 64 lines per region");
        if (cfg_.capacity < 1) throw ConfigError("sms: capacity must be >= 1");
    }

    std::vector<PrefetchRequest> observe(const MemoryAccess& acc) {
        if (!enabled_) return {};
        uint64_t base = acc.vaddr & ~(static_cast<uint64_t>(cfg_.region_size) - 1);
        int offset = static_cast<int>((acc.vaddr - base) /
                                      static_cast<uint64_t>(cfg_.line_size));

        if (training_ && training_->base == base) {
            if (offset != training_->trigger_offset)
                training_->pattern |= (1ull << offset);
            return {};
        }

        if (training_) commit(*training_);

        std::vector<PrefetchRequest> out;
        if (const Entry* e = find_trigger(offset); e != nullptr && e->region_base != base) {
            for (int b = 0; b < lines_per_region(); ++b) {
                if (e->pattern & (1ull << b)) {
                    uint64_t target =
                        base + static_cast<uint64_t>(b) *
                                   static_cast<uint64_t>(cfg_.line_size);
                    out.push_back({target, PrefetchCause::sms_replay, acc.task});
                }
            }
        }

        training_ = Training{base, offset, 0};
        return out;
    }

    void set_enabled(bool on) {
        if (!on && cfg_.clear_on_disable) {
            entries_.clear();
            training_.reset();
        }
        enabled_ = on;
    }
    bool enabled() const { return enabled_; }

    void reset() {
        entries_.clear();
        training_.reset();
    }

    const SmsConfig& config() const { return cfg_; }
    int lines_per_region() const { return cfg_.region_size / cfg_.line_size; }

    bool operator==(const SmsPrefetcher&) const = default;

  private:
    struct Training {
        uint64_t base = 0;
        int trigger_offset = 0;
        uint64_t pattern = 0;

        bool operator==(const Training&) const = default;
    };
    struct Entry {
        uint64_t region_base = 0;
        int trigger_offset = 0;
        uint64_t pattern = 0;
        uint64_t last_use = 0;

        bool operator==(const Entry&) const = default;
    };

    void commit(const Training& t) {
        ++use_clock_;
        for (auto& e : entries_) {
            if (e.trigger_offset == t.trigger_offset) {
                e.region_base = t.base;
                e.pattern = t.pattern;
                e.last_use = use_clock_;
                return;
            }
        }
        if (static_cast<int>(entries_.size()) == cfg_.capacity) {
            size_t victim = 0;
            for (size_t i = 1; i < entries_.size(); ++i)
                if (entries_[i].last_use < entries_[victim].last_use) victim = i;
            entries_.erase(entries_.begin() + static_cast<long>(victim));
        }
        entries_.push_back({t.base, t.trigger_offset, t.pattern, use_clock_});
    }

    const Entry* find_trigger(int offset) const {
        for (const auto& e : entries_)
            if (e.trigger_offset == offset) return &e;
        return nullptr;
    }

    SmsConfig cfg_;
    std::vector<Entry> entries_;
    std::optional<Training> training_;
    uint64_t use_clock_ = 0;
    bool enabled_ = true;
};

// ---------------------------------------------------------------------------
// Pointer-scanning (DMP-style) prefetcher.
//
// On every demand fill it scans the words of the loaded line; any
// word-aligned value falling into a configured plausible-pointer range is
// treated as a pointer and its line is requested. history_depth bounds how
// many recent fills stay in the scan window (default 1: just the current
// line).
// ---------------------------------------------------------------------------

struct DmpConfig {
    std::vector<std::pair<uint64_t, uint64_t>> valid_ranges; // [lo, hi)
    int history_depth = 1;
    int word_size = 8;
    int line_size = 64;
    bool clear_on_disable = false;

    bool operator==(const DmpConfig&) const = default;
};

class DmpPrefetcher {
  public:
    explicit DmpPrefetcher(DmpConfig cfg = {}) : cfg_(cfg) {
        if (cfg_.history_depth < 1)
            throw ConfigError("dmp: history_depth must be >= 1");
        auto sorted = cfg_.valid_ranges;
        std::sort(sorted.begin(), sorted.end());
        for (size_t i = 0; i < sorted.size(); ++i) {
            if (sorted[i].first >= sorted[i].second)
                throw ConfigError("dmp: range must satisfy lo < hi");
            if (i > 0 && sorted[i].first < sorted[i - 1].second)
                throw ConfigError("dmp: ranges must not overlap");
        }
    }

    std::vector<PrefetchRequest> observe(const MemoryAccess& acc,
                                         std::span<const uint64_t> line_contents) {
        if (!enabled_) return {};
        uint64_t line_base =
            acc.vaddr & ~(static_cast<uint64_t>(cfg_.line_size) - 1);
        history_.push_back(
            {line_base, {line_contents.begin(), line_contents.end()}});
        while (static_cast<int>(history_.size()) > cfg_.history_depth)
            history_.pop_front();

        std::vector<PrefetchRequest> out;
        std::vector<uint64_t> seen_lines;
        for (const auto& fill : history_) {
            for (uint64_t w : fill.words) {
                if (!in_range(w)) continue;
                if (w % static_cast<uint64_t>(cfg_.word_size) != 0) continue;
                uint64_t target_line = w / static_cast<uint64_t>(cfg_.line_size);
                uint64_t demand_line =
                    acc.vaddr / static_cast<uint64_t>(cfg_.line_size);
                if (target_line == demand_line) continue;
                if (std::find(seen_lines.begin(), seen_lines.end(),
                              target_line) != seen_lines.end())
                    continue;
                seen_lines.push_back(target_line);
                out.push_back({w, PrefetchCause::dmp_deref, acc.task});
            }
        }
        return out;
    }

    void set_enabled(bool on) {
        if (!on && cfg_.clear_on_disable) history_.clear();
        enabled_ = on;
    }
    bool enabled() const { return enabled_; }

    void reset() { history_.clear(); }

    const DmpConfig& config() const { return cfg_; }

    bool operator==(const DmpPrefetcher&) const = default;

  private:
    struct Fill {
        uint64_t line_base = 0;
        std::vector<uint64_t> words;

        bool operator==(const Fill&) const = default;
    };

    bool in_range(uint64_t v) const {
        for (const auto& [lo, hi] : cfg_.valid_ranges)
            if (v >= lo && v < hi) return true;
        return false;
    }

    DmpConfig cfg_;
    std::deque<Fill> history_;
    bool enabled_ = true;
};

// ---------------------------------------------------------------------------
// Variant wrapper used by the engine (one prefetcher per sharing domain).
// ---------------------------------------------------------------------------

using Prefetcher = std::variant<StridePrefetcher, SmsPrefetcher, DmpPrefetcher>;

inline std::vector<PrefetchRequest> observe(Prefetcher& p, const MemoryAccess& acc,
                                            std::span<const uint64_t> line_contents) {
    return std::visit(
        [&](auto& model) -> std::vector<PrefetchRequest> {
            using T = std::decay_t<decltype(model)>;
            if constexpr (std::is_same_v<T, DmpPrefetcher>)
                return model.observe(acc, line_contents);
            else
                return model.observe(acc);
        },
        p);
}

inline void set_enabled(Prefetcher& p, bool on) {
    std::visit([&](auto& model) { model.set_enabled(on); }, p);
}

inline bool is_enabled(const Prefetcher& p) {
    return std::visit([](const auto& model) { return model.enabled(); }, p);
}

inline void reset_state(Prefetcher& p) {
    std::visit([](auto& model) { model.reset(); }, p);
}

} // namespace prefsim
