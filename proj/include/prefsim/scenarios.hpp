#pragma once

#include <functional>
#include <string>
#include <vector>

#include "prefsim/engine.hpp"

namespace prefsim {

// Canned scheduler timelines for the `simulate` subcommand and the
// enable/disable-edge tests. Accesses are irrelevant here; nops stand in for
// work so the timelines stay readable.

struct SimScenario {
    std::string name;
    std::string description;
    std::function<Engine()> build; // engine with tasks queued, not yet run
};

struct EnableEdge {
    uint64_t tick = 0;
    EventKind cause = EventKind::run;
    int tid = 0;
    int domain = 0;
    bool enabled = true; // state after the event
};

// Transitions of a domain's prefetcher enable bit, derived from the event
// trace.
inline std::vector<EnableEdge> enable_edges(const std::vector<Event>& events) {
    std::vector<EnableEdge> edges;
    std::vector<char> state; // per-domain, 1 = enabled, default enabled
    for (const auto& e : events) {
        if (e.domain >= static_cast<int>(state.size()))
            state.resize(static_cast<size_t>(e.domain) + 1, 1);
        bool prev = state[static_cast<size_t>(e.domain)] != 0;
        if (prev != e.prefetcher_enabled) {
            edges.push_back({e.tick, e.kind, e.tid, e.domain, e.prefetcher_enabled});
            state[static_cast<size_t>(e.domain)] = e.prefetcher_enabled ? 1 : 0;
        }
    }
    return edges;
}

namespace detail {

inline Program repeat_nops(int n) {
    Program p;
    for (int i = 0; i < n; ++i) p.push_back(make_nop());
    return p;
}

} // namespace detail

// Single core, no SMT. P1 brackets a critical section with set/clear. P2 is
// interrupted inside its critical section by quantum expiry; the interloper
// P3 runs with prefetching restored, and the switch back to P2 disables it
// again.
inline Engine build_simple_core_timeline() {
    EngineConfig cfg;
    cfg.physical_cores = 1;
    cfg.smt_ways = 1;
    cfg.scheduler.quantum = 4;
    Engine eng(cfg);

    Program p1 = {make_prctl(true), make_nop(), make_prctl(false)};
    Program p2 = {make_prctl(true), make_nop(), make_nop(), make_nop(),
                  make_nop(), make_prctl(false)};
    Program p3 = {make_nop(), make_nop()};
    eng.add_task(std::move(p1));
    eng.add_task(std::move(p2));
    eng.add_task(std::move(p3));
    return eng;
}

// Two SMT siblings sharing one prefetcher. The timeline walks through: a
// critical section on one sibling while the other runs normally, a task
// descheduled mid-critical-section (prefetching resumes while it waits), two
// parallel critical sections (disabled from the first set to the last
// clear), and the interrupted task resuming its critical section.
inline Engine build_shared_domain_timeline() {
    EngineConfig cfg;
    cfg.physical_cores = 1;
    cfg.smt_ways = 2;
    cfg.scheduler.quantum = 100;
    Engine eng(cfg);

    Program p1 = {make_prctl(true), make_nop(), make_nop(), make_prctl(false)};
    Program p5 = {make_prctl(true), make_nop(), make_nop(), make_yield(),
                  make_nop(), make_prctl(false)};
    Program p2 = {make_prctl(true), make_nop(), make_nop(), make_prctl(false),
                  make_nop()};
    Program p4 = detail::repeat_nops(9);
    Program p6 = {make_prctl(true), make_nop(), make_nop(), make_prctl(false)};

    eng.add_task(std::move(p1), /*core=*/0); // tid 0
    eng.add_task(std::move(p5), /*core=*/0); // tid 1
    eng.add_task(std::move(p2), /*core=*/0); // tid 2
    eng.add_task(std::move(p4), /*core=*/1); // tid 3
    eng.add_task(std::move(p6), /*core=*/1); // tid 4
    return eng;
}

// Two equal tasks on one core: quantum 3 round robin, switch pattern
// A3 B3 A3 B3.
inline Engine build_round_robin_demo() {
    EngineConfig cfg;
    cfg.physical_cores = 1;
    cfg.smt_ways = 1;
    cfg.scheduler.quantum = 3;
    Engine eng(cfg);
    eng.add_task(detail::repeat_nops(6));
    eng.add_task(detail::repeat_nops(6));
    return eng;
}

inline const std::vector<SimScenario>& sim_scenarios() {
    static const std::vector<SimScenario> scenarios = {
        {"simple-core", "critical sections and preemption on one core",
         build_simple_core_timeline},
        {"shared-domain", "SMT siblings sharing a prefetcher, parallel critical sections",
         build_shared_domain_timeline},
        {"round-robin", "two tasks alternating under quantum 3",
         build_round_robin_demo},
    };
    return scenarios;
}

inline const SimScenario* find_sim_scenario(const std::string& name) {
    for (const auto& s : sim_scenarios())
        if (s.name == name) return &s;
    return nullptr;
}

} // namespace prefsim
