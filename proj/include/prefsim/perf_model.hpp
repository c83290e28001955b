#pragma once

#include <string>

#include "prefsim/engine.hpp"
#include "prefsim/rng.hpp"

namespace prefsim {

// Analytic cycle model on top of the cache+prefetcher simulation: total
// cycles are the sum of per-access latencies plus a fixed cost per flag
// syscall. It reproduces the performance *shape* of scoping the defense, not
// absolute hardware numbers.

enum class PerfWorkload { streaming, pointer_chase, mixed_crypto_app };
enum class PerfMode { enabled, disabled, flag_scoped };

inline std::string to_string(PerfWorkload w) {
    switch (w) {
        case PerfWorkload::streaming: return "streaming";
        case PerfWorkload::pointer_chase: return "pointer_chase";
        case PerfWorkload::mixed_crypto_app: return "mixed_crypto_app";
    }
    return "?";
}

inline std::string to_string(PerfMode m) {
    switch (m) {
        case PerfMode::enabled: return "enabled";
        case PerfMode::disabled: return "disabled";
        case PerfMode::flag_scoped: return "flag_scoped";
    }
    return "?";
}

struct PerfParams {
    int access_count = 10000;
    int phases = 10;                // mixed workload: app+crypto repetitions
    double critical_fraction = 0.1; // share of accesses in the crypto phase
    uint64_t syscall_cost = 430;    // cycles per flag set/clear call
    uint64_t seed = 1;              // pointer-chase address derivation
    CacheGeometry cache;
    StrideConfig stride;
};

struct PerfRun {
    PerfWorkload workload = PerfWorkload::streaming;
    PerfMode mode = PerfMode::enabled;
    uint64_t cycles = 0;
    uint64_t accesses = 0;
    uint64_t prctl_calls = 0;
};

struct PerfModelResult {
    std::string workload;
    uint64_t cycles_enabled = 0;
    uint64_t cycles_disabled = 0;
    uint64_t cycles_flag_scoped = 0;
    double critical_fraction = 0.0;
};

namespace detail {

inline Program perf_program(PerfWorkload w, PerfMode mode, const PerfParams& p) {
    const uint64_t line = static_cast<uint64_t>(p.cache.line_size);
    Program prog;
    switch (w) {
        case PerfWorkload::streaming: {
            constexpr uint64_t kBase = 0x1000000;
            for (int i = 0; i < p.access_count; ++i)
                prog.push_back(make_access(0x600, kBase + uint64_t(i) * line));
            break;
        }
        case PerfWorkload::pointer_chase: {
            // irregular chain: consecutive deltas never repeat, which keeps
            // the stride automaton below its emission threshold
            constexpr uint64_t kBase = 0x4000000;
            Xorshift64Star rng(p.seed);
            int64_t prev_delta = 0;
            uint64_t idx = 0;
            for (int i = 0; i < p.access_count; ++i) {
                prog.push_back(make_access(0x610, kBase + idx * line));
                uint64_t next;
                int64_t delta;
                do {
                    next = rng.next_below(1 << 20);
                    delta = int64_t(next) - int64_t(idx);
                } while (delta == prev_delta || delta == 0);
                prev_delta = delta;
                idx = next;
            }
            break;
        }
        case PerfWorkload::mixed_crypto_app: {
            constexpr uint64_t kAppBase = 0x2000000;
            constexpr uint64_t kCryptoBase = 0x8000000;
            constexpr uint64_t kPhaseGap = 0x100000;
            int per_phase = p.access_count / p.phases;
            int crypto_per_phase =
                static_cast<int>(double(per_phase) * p.critical_fraction + 0.5);
            int app_per_phase = per_phase - crypto_per_phase;
            for (int ph = 0; ph < p.phases; ++ph) {
                uint64_t app_region = kAppBase + uint64_t(ph) * kPhaseGap;
                for (int i = 0; i < app_per_phase; ++i)
                    prog.push_back(make_access(0x620, app_region + uint64_t(i) * line));
                uint64_t crypto_region = kCryptoBase + uint64_t(ph) * kPhaseGap;
                if (mode == PerfMode::flag_scoped) prog.push_back(make_prctl(true));
                for (int i = 0; i < crypto_per_phase; ++i)
                    prog.push_back(make_access(0x630, crypto_region + uint64_t(i) * line));
                if (mode == PerfMode::flag_scoped) prog.push_back(make_prctl(false));
            }
            break;
        }
    }
    return prog;
}

} // namespace detail

inline PerfRun run_perf_model(PerfWorkload workload, PerfMode mode,
                              const PerfParams& params = {}) {
    EngineConfig cfg;
    cfg.cache = params.cache;
    cfg.prefetcher.family = PrefFamily::ip_stride;
    cfg.prefetcher.stride = params.stride;
    cfg.scheduler.quantum = 1 << 30; // single task, never preempted
    cfg.force_prefetcher_off = (mode == PerfMode::disabled);
    Engine eng(cfg);
    eng.set_tracing(false);

    Program prog = detail::perf_program(workload, mode, params);
    uint64_t accesses = 0;
    for (const auto& a : prog)
        if (a.kind == ActionKind::access) ++accesses;

    int tid = eng.add_task(std::move(prog));
    eng.run(uint64_t(params.access_count) * 4 + 1024);

    PerfRun r;
    r.workload = workload;
    r.mode = mode;
    r.accesses = accesses;
    r.prctl_calls = eng.prctl_calls(tid);
    r.cycles = eng.total_access_latency(tid) + r.prctl_calls * params.syscall_cost;
    return r;
}

inline PerfModelResult perf_model_result(PerfWorkload workload,
                                         const PerfParams& params = {}) {
    PerfModelResult res;
    res.workload = to_string(workload);
    res.cycles_enabled = run_perf_model(workload, PerfMode::enabled, params).cycles;
    res.cycles_disabled = run_perf_model(workload, PerfMode::disabled, params).cycles;
    res.cycles_flag_scoped =
        run_perf_model(workload, PerfMode::flag_scoped, params).cycles;
    res.critical_fraction =
        workload == PerfWorkload::mixed_crypto_app ? params.critical_fraction : 0.0;
    return res;
}

// Streaming defeats nothing: after a fixed warmup the next line is always
// resident before it is demanded. warmup = allocate + learn + first
// confident access, i.e. 3 misses.
inline uint64_t streaming_closed_form(PerfMode mode, int n, const CacheGeometry& g) {
    constexpr uint64_t kWarmup = 3;
    if (mode == PerfMode::disabled) return uint64_t(n) * g.latency_miss;
    return kWarmup * g.latency_miss + (uint64_t(n) - kWarmup) * g.latency_hit;
}

} // namespace prefsim
