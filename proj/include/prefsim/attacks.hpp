#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "prefsim/catalog.hpp"
#include "prefsim/engine.hpp"
#include "prefsim/rng.hpp"

namespace prefsim {

// Engine knobs shared by all scenarios; every scenario builds a fresh engine
// per trial so trials are independent and a (config, seed) pair pins the run.
struct AttackTuning {
    CacheGeometry cache;
    StrideConfig stride;
    SmsConfig sms;
    DmpConfig dmp;
    int quantum = 1000; // large: scenario flow is driven by yield/end
};

struct ProbeRow {
    int trial = 0;
    int line_index = 0;
    uint64_t latency = 0;
    bool hit = false;
};

struct LeakageReport {
    std::string scenario;
    bool defended = false;
    int trials = 0;
    int correct = 0;
    double guess_accuracy = 0.0;
    double chance_level = 0.5;
    uint64_t seed = 0;
    // Defended runs snapshot the domain prefetcher tables around the
    // victim's critical section; any difference counts here.
    int victim_state_mutations = 0;
    std::map<std::string, std::vector<uint64_t>> latency_samples;
    std::vector<ProbeRow> probe_rows;          // per-probe timing, CSV fodder
    std::vector<StageRecord> stage_trace;      // from the last trial's run
    std::vector<RequestRecord> request_trace;  // from the last trial's run
};

namespace detail {

inline EngineConfig scenario_engine(PrefFamily family, const AttackTuning& t,
                                    int physical = 1, int smt = 1) {
    EngineConfig cfg;
    cfg.physical_cores = physical;
    cfg.smt_ways = smt;
    cfg.granularity = DomainGranularity::per_physical_core;
    cfg.cache = t.cache;
    cfg.prefetcher.family = family;
    cfg.prefetcher.stride = t.stride;
    cfg.prefetcher.sms = t.sms;
    cfg.prefetcher.dmp = t.dmp;
    cfg.scheduler.quantum = t.quantum;
    return cfg;
}

// Normalizes the enabled bit away so snapshots compare table contents only.
inline bool same_tables(Prefetcher a, Prefetcher b) {
    set_enabled(a, false);
    set_enabled(b, false);
    return a == b;
}

// Counts table mutations across the victim's prctl_set .. prctl_clear spans.
struct CriticalSectionWatch {
    Engine& eng;
    int victim_tid;
    std::optional<Prefetcher> snapshot;
    int mutations = 0;

    void attach() {
        eng.event_hook = [this](const Event& e) {
            if (e.tid != victim_tid) return;
            if (e.kind == EventKind::prctl_set)
                snapshot = eng.domain_prefetcher(e.domain);
            else if (e.kind == EventKind::prctl_clear && snapshot) {
                if (!same_tables(eng.domain_prefetcher(e.domain), *snapshot))
                    ++mutations;
                snapshot.reset();
            }
        };
    }
};

// Order of table lines for the secret=0 class: a permutation with no two
// consecutive equal deltas, so the stride automaton never reaches the
// emission threshold. Resampled from the trial stream until valid.
inline std::vector<int> irregular_order(int n, Xorshift64Star& rng) {
    std::vector<int> order(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
    auto bad = [&]() {
        for (size_t i = 2; i < order.size(); ++i) {
            int d1 = order[i - 1] - order[i - 2];
            int d2 = order[i] - order[i - 1];
            if (d1 == d2) return true;
        }
        return false;
    };
    do {
        rng.shuffle(order);
    } while (bad());
    return order;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Lookup-table stride leak: the victim walks a table either with a constant
// stride (secret bit 1) or in an irregular order (secret bit 0). A constant
// walk trains the stride prefetcher, which then fetches the line just past
// the table; the attacker flushes beforehand and times that line afterwards.
// ---------------------------------------------------------------------------
inline LeakageReport run_shin(bool defended, int trials, uint64_t seed,
                              const AttackTuning& tuning = {}) {
    constexpr uint64_t kTable = 0x100000;
    constexpr int kLines = 8;
    constexpr uint64_t kVictimPc = 0x500;  // tag 0x00
    constexpr uint64_t kProbePc = 0x9F3;   // tag 0xF3, no collision
    const int line = tuning.cache.line_size;
    const uint64_t monitor = kTable + uint64_t(kLines) * uint64_t(line);

    LeakageReport rep;
    rep.scenario = "shin";
    rep.defended = defended;
    rep.trials = trials;
    rep.seed = seed;
    rep.chance_level = 0.5;

    Xorshift64Star master(seed);
    for (int trial = 0; trial < trials; ++trial) {
        Xorshift64Star rng = master.fork();
        bool secret = rng.next_bit();

        Engine eng(detail::scenario_engine(PrefFamily::ip_stride, tuning));

        Program attacker;
        for (int i = 0; i < kLines; ++i)
            attacker.push_back(make_flush(kTable + uint64_t(i) * uint64_t(line),
                                          StageLabel::s2_reset));
        attacker.push_back(make_flush(monitor, StageLabel::s2_reset));
        attacker.push_back(make_yield());
        attacker.push_back(make_access(kProbePc, monitor, StageLabel::s5_extract, 0));

        Program victim;
        if (defended) victim.push_back(make_prctl(true));
        std::vector<int> order;
        if (secret) {
            for (int i = 0; i < kLines; ++i) order.push_back(i);
        } else {
            order = detail::irregular_order(kLines, rng);
        }
        for (int i = 0; i < kLines; ++i) {
            StageLabel st = (i + 1 == kLines) ? StageLabel::s4_trigger
                                              : StageLabel::s3_train;
            victim.push_back(make_access(
                kVictimPc,
                kTable + uint64_t(order[static_cast<size_t>(i)]) * uint64_t(line),
                st));
        }
        if (defended) victim.push_back(make_prctl(false));

        int attacker_tid = eng.add_task(std::move(attacker));
        int victim_tid = eng.add_task(std::move(victim));
        (void)attacker_tid;

        detail::CriticalSectionWatch watch{eng, victim_tid, {}, 0};
        if (defended) watch.attach();
        eng.run();
        rep.stage_trace = eng.stage_trace();
        rep.request_trace = eng.request_trace();

        const auto& probes = eng.probes();
        uint64_t latency = probes.back().latency;
        bool guess = probes.back().hit;
        rep.latency_samples[secret ? "bit1" : "bit0"].push_back(latency);
        rep.probe_rows.push_back({trial, 0, latency, probes.back().hit});
        if (guess == secret) ++rep.correct;
        rep.victim_state_mutations += watch.mutations;
    }
    rep.guess_accuracy = trials > 0 ? double(rep.correct) / double(trials) : 0.0;
    return rep;
}

// ---------------------------------------------------------------------------
// Instruction-pointer collision attack on the stride prefetcher. The attacker
// primes a table entry through a load whose low 8 pc bits equal the victim's
// branch-guarded load, yields, and afterwards re-triggers its own pattern.
// If the victim took the branch, the colliding load rewrote the entry and
// lowered its confidence, so the trigger stays silent; extraction uses an
// eviction set on the attacker's own prime target.
// ---------------------------------------------------------------------------
inline LeakageReport run_afterimage_v1(bool defended, int trials, uint64_t seed,
                                       const AttackTuning& tuning = {},
                                       bool collision = true) {
    constexpr uint64_t kPrimeBase = 0x200000;
    constexpr uint64_t kAttackPc = 0x1400;      // tag 0x00
    constexpr uint64_t kVictimPcTaken = 0x2300; // tag 0x00, collides
    constexpr uint64_t kVictimPcTakenNoColl = 0x2307; // tag 0x07
    constexpr uint64_t kVictimPcOther = 0x3355; // tag 0x55
    constexpr uint64_t kVictimAddr = 0x900000;
    constexpr uint64_t kOtherAddr = 0x700000;
    const int line = tuning.cache.line_size;
    const uint64_t stride = uint64_t(line);
    const uint64_t trigger_addr = kPrimeBase + 4 * stride;
    const uint64_t target = kPrimeBase + 5 * stride; // expected prefetch

    LeakageReport rep;
    rep.scenario = "afterimage-v1";
    rep.defended = defended;
    rep.trials = trials;
    rep.seed = seed;
    rep.chance_level = 0.5;

    const auto evset = build_eviction_set(tuning.cache, target);

    Xorshift64Star master(seed);
    for (int trial = 0; trial < trials; ++trial) {
        Xorshift64Star rng = master.fork();
        bool taken = rng.next_bit();

        Engine eng(detail::scenario_engine(PrefFamily::ip_stride, tuning));

        Program attacker;
        for (size_t k = 0; k < evset.size(); ++k) {
            uint64_t pc = 0xB001 + uint64_t(k) * 0x10; // distinct non-zero tags
            attacker.push_back(make_access(pc, evset[k], StageLabel::s2_reset));
        }
        for (int i = 0; i < 4; ++i)
            attacker.push_back(make_access(kAttackPc,
                                           kPrimeBase + uint64_t(i) * stride,
                                           StageLabel::s3_train));
        attacker.push_back(make_yield());
        attacker.push_back(
            make_access(kAttackPc, trigger_addr, StageLabel::s4_trigger));
        for (size_t k = 0; k < evset.size(); ++k) {
            uint64_t pc = 0xB001 + uint64_t(k) * 0x10;
            attacker.push_back(make_access(pc, evset[k], StageLabel::s5_extract,
                                           static_cast<int>(k)));
        }

        Program victim;
        if (defended) victim.push_back(make_prctl(true));
        if (taken) {
            uint64_t pc = collision ? kVictimPcTaken : kVictimPcTakenNoColl;
            victim.push_back(make_access(pc, kVictimAddr, StageLabel::s3_train));
        } else {
            victim.push_back(
                make_access(kVictimPcOther, kOtherAddr, StageLabel::s3_train));
        }
        if (defended) victim.push_back(make_prctl(false));

        eng.add_task(std::move(attacker));
        int victim_tid = eng.add_task(std::move(victim));

        detail::CriticalSectionWatch watch{eng, victim_tid, {}, 0};
        if (defended) watch.attach();
        eng.run();
        rep.stage_trace = eng.stage_trace();
        rep.request_trace = eng.request_trace();

        bool all_hit = true;
        for (const auto& p : eng.probes()) {
            rep.latency_samples[taken ? "taken" : "not_taken"].push_back(p.latency);
            rep.probe_rows.push_back({trial, p.tag, p.latency, p.hit});
            if (!p.hit) all_hit = false;
        }
        bool guess = all_hit; // prefetch fired only when the entry survived
        if (guess == taken) ++rep.correct;
        rep.victim_state_mutations += watch.mutations;
    }
    rep.guess_accuracy = trials > 0 ? double(rep.correct) / double(trials) : 0.0;
    return rep;
}

// ---------------------------------------------------------------------------
// Region-pattern replay: the victim touches a secret-dependent subset of
// lines in one region; the attacker's trigger access in a fresh region with
// the matching trigger offset makes the prefetcher replay the footprint
// there, where the attacker can time it line by line.
// ---------------------------------------------------------------------------
inline LeakageReport run_sms(bool defended, int trials, uint64_t seed,
                             const AttackTuning& tuning = {},
                             bool alias_trigger = false) {
    constexpr uint64_t kVictimRegion = 0x400000;
    constexpr uint64_t kProbeRegion = 0x600000;
    constexpr uint64_t kVictimPc = 0x800;
    constexpr uint64_t kAttackPc = 0x9A0;
    const int line = tuning.sms.line_size;

    LeakageReport rep;
    rep.scenario = "sms";
    rep.defended = defended;
    rep.trials = trials;
    rep.seed = seed;
    rep.chance_level = 1.0 / 16.0;

    Xorshift64Star master(seed);
    for (int trial = 0; trial < trials; ++trial) {
        Xorshift64Star rng = master.fork();
        int secret = static_cast<int>(rng.next_below(16));

        Engine eng(detail::scenario_engine(PrefFamily::sms, tuning));

        int trigger_offset = alias_trigger ? 5 : 0;
        Program attacker;
        for (int j = 0; j < 4; ++j)
            attacker.push_back(make_flush(
                kProbeRegion + uint64_t(1 + j) * uint64_t(line), StageLabel::s2_reset));
        attacker.push_back(make_yield());
        attacker.push_back(make_access(
            kAttackPc,
            kProbeRegion + uint64_t(trigger_offset) * uint64_t(line),
            StageLabel::s4_trigger));
        for (int j = 0; j < 4; ++j)
            attacker.push_back(make_access(kAttackPc + 8,
                                           kProbeRegion + uint64_t(1 + j) * uint64_t(line),
                                           StageLabel::s5_extract, j));

        Program victim;
        if (defended) victim.push_back(make_prctl(true));
        victim.push_back(make_access(kVictimPc, kVictimRegion, StageLabel::s3_train));
        for (int j = 0; j < 4; ++j)
            if (secret & (1 << j))
                victim.push_back(make_access(
                    kVictimPc, kVictimRegion + uint64_t(1 + j) * uint64_t(line),
                    StageLabel::s3_train));
        if (defended) victim.push_back(make_prctl(false));

        eng.add_task(std::move(attacker));
        int victim_tid = eng.add_task(std::move(victim));

        detail::CriticalSectionWatch watch{eng, victim_tid, {}, 0};
        if (defended) watch.attach();
        eng.run();
        rep.stage_trace = eng.stage_trace();
        rep.request_trace = eng.request_trace();

        int guessed = 0;
        for (const auto& p : eng.probes()) {
            bool bit_set = (secret & (1 << p.tag)) != 0;
            rep.latency_samples[bit_set ? "pattern_line" : "untouched_line"]
                .push_back(p.latency);
            rep.probe_rows.push_back({trial, p.tag, p.latency, p.hit});
            if (p.hit) guessed |= (1 << p.tag);
        }
        if (guessed == secret) ++rep.correct;
        rep.victim_state_mutations += watch.mutations;
    }
    rep.guess_accuracy = trials > 0 ? double(rep.correct) / double(trials) : 0.0;
    return rep;
}

// ---------------------------------------------------------------------------
// Pointer-value leak: the victim's intermediate value is a plausible pointer
// iff the secret bit is set. Loading the line holding that value makes the
// pointer-scanning prefetcher fetch the pointed-to line. The victim's access
// pattern is identical for both secret values; only the stored word differs,
// so a constant-time victim leaks all the same.
// ---------------------------------------------------------------------------
inline LeakageReport run_dmp(bool defended, int trials, uint64_t seed,
                             AttackTuning tuning = {}) {
    constexpr uint64_t kPtrRangeLo = 0x10000000;
    constexpr uint64_t kPtrRangeHi = 0x10010000;
    constexpr uint64_t kPointer = 0x10008000;
    constexpr uint64_t kJunk = 0xDEAD0; // below the valid range
    constexpr uint64_t kVictimBuf = 0x300040;
    constexpr uint64_t kVictimPc = 0x2A00;

    if (tuning.dmp.valid_ranges.empty())
        tuning.dmp.valid_ranges = {{kPtrRangeLo, kPtrRangeHi}};

    LeakageReport rep;
    rep.scenario = "dmp";
    rep.defended = defended;
    rep.trials = trials;
    rep.seed = seed;
    rep.chance_level = 0.5;

    const auto evset = build_eviction_set(tuning.cache, kPointer);

    Xorshift64Star master(seed);
    for (int trial = 0; trial < trials; ++trial) {
        Xorshift64Star rng = master.fork();
        bool secret = rng.next_bit();

        Engine eng(detail::scenario_engine(PrefFamily::dmp, tuning));

        Program attacker;
        for (size_t k = 0; k < evset.size(); ++k) {
            uint64_t pc = 0xC001 + uint64_t(k) * 0x10;
            attacker.push_back(make_access(pc, evset[k], StageLabel::s2_reset));
        }
        attacker.push_back(make_yield());
        for (size_t k = 0; k < evset.size(); ++k) {
            uint64_t pc = 0xC001 + uint64_t(k) * 0x10;
            attacker.push_back(make_access(pc, evset[k], StageLabel::s5_extract,
                                           static_cast<int>(k)));
        }

        Program victim;
        if (defended) victim.push_back(make_prctl(true));
        victim.push_back(
            make_write(kVictimBuf, secret ? kPointer : kJunk, StageLabel::s3_train));
        victim.push_back(make_access(kVictimPc, kVictimBuf, StageLabel::s4_trigger));
        if (defended) victim.push_back(make_prctl(false));

        eng.add_task(std::move(attacker));
        int victim_tid = eng.add_task(std::move(victim));

        detail::CriticalSectionWatch watch{eng, victim_tid, {}, 0};
        if (defended) watch.attach();
        eng.run();
        rep.stage_trace = eng.stage_trace();
        rep.request_trace = eng.request_trace();

        bool any_miss = false;
        for (const auto& p : eng.probes()) {
            rep.latency_samples[secret ? "pointer" : "no_pointer"].push_back(p.latency);
            rep.probe_rows.push_back({trial, p.tag, p.latency, p.hit});
            if (!p.hit) any_miss = true;
        }
        bool guess = any_miss; // the fill displaced one eviction-set member
        if (guess == secret) ++rep.correct;
        rep.victim_state_mutations += watch.mutations;
    }
    rep.guess_accuracy = trials > 0 ? double(rep.correct) / double(trials) : 0.0;
    return rep;
}

// ---------------------------------------------------------------------------
// SMT bypass regression: victim and attacker run simultaneously on sibling
// logical cores sharing one prefetcher. The protected victim walks its table
// while the attacker requests prefetching to be enabled on its own sibling.
// Under the domain-wide rule that request is a no-op; under the deliberately
// broken per-core policy it re-enables the shared prefetcher mid-walk and
// the leak returns.
// ---------------------------------------------------------------------------
inline LeakageReport run_smt_bypass_regression(int trials, uint64_t seed,
                                               const AttackTuning& tuning = {},
                                               bool mutant = false,
                                               bool victim_protected = true) {
    constexpr uint64_t kTable = 0x100000;
    constexpr int kLines = 8;
    constexpr uint64_t kVictimPc = 0x500;
    constexpr uint64_t kProbePc = 0x9F3;
    const int line = tuning.cache.line_size;
    const uint64_t monitor = kTable + uint64_t(kLines) * uint64_t(line);

    LeakageReport rep;
    rep.scenario = "smt-bypass";
    rep.defended = victim_protected;
    rep.trials = trials;
    rep.seed = seed;
    rep.chance_level = 0.5;

    Xorshift64Star master(seed);
    for (int trial = 0; trial < trials; ++trial) {
        Xorshift64Star rng = master.fork();
        bool secret = rng.next_bit();

        EngineConfig cfg = detail::scenario_engine(PrefFamily::ip_stride, tuning, 1, 2);
        if (mutant) cfg.scheduler.policy = EnablementPolicy::per_core_broken;
        Engine eng(cfg);

        Program victim;
        if (victim_protected) victim.push_back(make_prctl(true));
        std::vector<int> order;
        if (secret) {
            for (int i = 0; i < kLines; ++i) order.push_back(i);
        } else {
            order = detail::irregular_order(kLines, rng);
        }
        for (int i = 0; i < kLines; ++i) {
            victim.push_back(make_access(
                kVictimPc,
                kTable + uint64_t(order[static_cast<size_t>(i)]) * uint64_t(line),
                StageLabel::s3_train));
        }
        if (victim_protected) victim.push_back(make_prctl(false));

        // Attacker timing: its prctl lands mid-walk, its probe after the
        // victim's critical section closed.
        Program attacker;
        attacker.push_back(make_nop());
        attacker.push_back(make_nop());
        attacker.push_back(make_prctl(false)); // "please enable prefetching"
        for (int i = 0; i < 6; ++i) attacker.push_back(make_nop());
        attacker.push_back(make_access(kProbePc, monitor, StageLabel::s5_extract, 0));

        int victim_tid = eng.add_task(std::move(victim), /*core=*/0);
        eng.add_task(std::move(attacker), /*core=*/1);

        detail::CriticalSectionWatch watch{eng, victim_tid, {}, 0};
        if (victim_protected) watch.attach();
        eng.run();
        rep.stage_trace = eng.stage_trace();
        rep.request_trace = eng.request_trace();

        const auto& probes = eng.probes();
        bool guess = probes.back().hit;
        rep.latency_samples[secret ? "bit1" : "bit0"].push_back(probes.back().latency);
        rep.probe_rows.push_back({trial, 0, probes.back().latency, probes.back().hit});
        if (guess == secret) ++rep.correct;
        rep.victim_state_mutations += watch.mutations;
    }
    rep.guess_accuracy = trials > 0 ? double(rep.correct) / double(trials) : 0.0;
    return rep;
}

// ---------------------------------------------------------------------------
// Scenario registry for the CLI and the instrumentation tests.
// ---------------------------------------------------------------------------

struct ScenarioInfo {
    std::string name;
    PrefFamily family = PrefFamily::ip_stride;
    int attacker_tid = 0;
    int victim_tid = 1;
    std::vector<Stage> declared_stages;
    std::function<LeakageReport(bool defended, int trials, uint64_t seed)> run;
};

inline const std::vector<ScenarioInfo>& attack_scenarios() {
    using detail::scenario_engine;
    using L = StageLabel;
    using C = ExecContext;
    auto st = [](L l, C c) { return Stage{l, c, StageSource::prose}; };
    static const std::vector<ScenarioInfo> scenarios = {
        {"shin", PrefFamily::ip_stride, 0, 1,
         {st(L::s2_reset, C::attacker), st(L::s3_train, C::victim),
          st(L::s4_trigger, C::victim), st(L::s5_extract, C::attacker)},
         [](bool d, int t, uint64_t s) { return run_shin(d, t, s); }},
        {"afterimage", PrefFamily::ip_stride, 0, 1,
         {st(L::s2_reset, C::attacker), st(L::s3_train, C::attacker),
          st(L::s3_train, C::victim), st(L::s4_trigger, C::attacker),
          st(L::s5_extract, C::attacker)},
         [](bool d, int t, uint64_t s) { return run_afterimage_v1(d, t, s); }},
        {"sms", PrefFamily::sms, 0, 1,
         {st(L::s2_reset, C::attacker), st(L::s3_train, C::victim),
          st(L::s4_trigger, C::attacker), st(L::s5_extract, C::attacker)},
         [](bool d, int t, uint64_t s) { return run_sms(d, t, s); }},
        {"dmp", PrefFamily::dmp, 0, 1,
         {st(L::s2_reset, C::attacker), st(L::s3_train, C::victim),
          st(L::s4_trigger, C::victim), st(L::s5_extract, C::attacker)},
         [](bool d, int t, uint64_t s) { return run_dmp(d, t, s); }},
        {"smt-bypass", PrefFamily::ip_stride, 1, 0,
         {st(L::s3_train, C::victim), st(L::s5_extract, C::attacker)},
         [](bool, int t, uint64_t s) { return run_smt_bypass_regression(t, s); }},
    };
    return scenarios;
}

inline const ScenarioInfo* find_scenario(const std::string& name) {
    for (const auto& s : attack_scenarios())
        if (s.name == name) return &s;
    return nullptr;
}

// Config-driven entry point; rejects a prefetcher family that does not match
// the scenario's requirement.
inline LeakageReport run_attack_checked(const std::string& name, PrefFamily family,
                                        bool defended, int trials, uint64_t seed) {
    const ScenarioInfo* s = find_scenario(name);
    if (s == nullptr) throw ConfigError("unknown scenario: " + name);
    if (s->family != family)
        throw ConfigError("scenario " + name + " requires prefetcher family " +
                          to_string(s->family) + ", config says " + to_string(family));
    return s->run(defended, trials, seed);
}

} // namespace prefsim
