#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "prefsim/cache.hpp"
#include "prefsim/errors.hpp"
#include "prefsim/prefetcher.hpp"
#include "prefsim/rng.hpp"
#include "prefsim/task.hpp"
#include "prefsim/topology.hpp"

namespace prefsim {

enum class PrefFamily { ip_stride, sms, dmp, xpt };

inline std::string to_string(PrefFamily f) {
    switch (f) {
        case PrefFamily::ip_stride: return "ip_stride";
        case PrefFamily::sms: return "sms";
        case PrefFamily::dmp: return "dmp";
        case PrefFamily::xpt: return "xpt";
    }
    return "?";
}

// domain_wide is the correct rule: a domain's prefetcher may be enabled only
// if no core sharing it runs a flagged task. per_core_broken deliberately
// ignores sibling cores; it exists so the SMT bypass regression can prove
// the test suite detects that failure mode.
enum class EnablementPolicy { domain_wide, per_core_broken };

struct SchedulerConfig {
    int quantum = 16;
    EnablementPolicy policy = EnablementPolicy::domain_wide;
    bool clear_prefetcher_on_switch = false; // comparison countermeasure

    bool operator==(const SchedulerConfig&) const = default;
};

struct PrefetcherSetup {
    PrefFamily family = PrefFamily::ip_stride;
    StrideConfig stride;
    SmsConfig sms;
    DmpConfig dmp;

    bool operator==(const PrefetcherSetup&) const = default;
};

struct EngineConfig {
    int physical_cores = 1;
    int smt_ways = 1;
    DomainGranularity granularity = DomainGranularity::per_physical_core;
    CacheGeometry cache;
    PrefetcherSetup prefetcher;
    SchedulerConfig scheduler;
    double noise_flush_rate = 0.0; // per-tick per-domain random flush chance
    uint64_t noise_seed = 1;
    bool force_prefetcher_off = false; // machine with prefetching hard-disabled
};

enum class EventKind { run, sw, prctl_set, prctl_clear, migrate, spawn, finish };

inline std::string to_string(EventKind k) {
    switch (k) {
        case EventKind::run: return "run";
        case EventKind::sw: return "switch";
        case EventKind::prctl_set: return "prctl_set";
        case EventKind::prctl_clear: return "prctl_clear";
        case EventKind::migrate: return "migrate";
        case EventKind::spawn: return "spawn";
        case EventKind::finish: return "finish";
    }
    return "?";
}

struct Event {
    uint64_t tick = 0;
    int core = 0;
    EventKind kind = EventKind::run;
    int tid = 0;
    int domain = 0;
    bool prefetcher_enabled = true;
};

struct ProbeRecord {
    uint64_t tick = 0;
    int tid = 0;
    int tag = 0;
    uint64_t addr = 0;
    uint64_t latency = 0;
    bool hit = false;
};

struct RequestRecord {
    uint64_t tick = 0;
    int core = 0;
    int tid = 0;
    uint64_t pc = 0;
    uint64_t vaddr = 0;
    int requests_emitted = 0;
};

struct StageRecord {
    StageLabel stage = StageLabel::none;
    int tid = 0;

    bool operator==(const StageRecord&) const = default;
};

// Deterministic single-threaded machine: topology, one cache and one
// prefetcher per sharing domain, sparse word memory, and a per-core
// round-robin scheduler carrying the prefetch_disable defense. SMT is
// modeled by stepping sibling cores in id order inside each tick.
class Engine {
  public:
    explicit Engine(EngineConfig cfg)
        : cfg_(cfg),
          topo_(Topology::build(cfg.physical_cores, cfg.smt_ways, cfg.granularity)),
          noise_rng_(cfg.noise_seed) {
        if (cfg_.prefetcher.family == PrefFamily::xpt)
            throw ConfigError("engine: the xpt family is catalog-only, no executable model");
        for (int d = 0; d < topo_.domain_count(); ++d) {
            caches_.emplace_back(cfg_.cache);
            prefs_.push_back(make_prefetcher(cfg_.prefetcher));
            if (cfg_.force_prefetcher_off) set_enabled(prefs_.back(), false);
        }
        queues_.resize(static_cast<size_t>(topo_.logical_cores()));
        current_.assign(static_cast<size_t>(topo_.logical_cores()), -1);
        mask_.assign(static_cast<size_t>(topo_.logical_cores()), false);
        disabled_ticks_.assign(static_cast<size_t>(topo_.domain_count()), 0);
    }

    // --- task management -------------------------------------------------

    // New top-level task: flag starts cleared, queued on `core`.
    int add_task(Program program, int core = 0) {
        check_core(core);
        int tid = static_cast<int>(tasks_.size());
        Task t;
        t.tid = tid;
        t.program = std::move(program);
        tasks_.push_back(std::move(t));
        queues_[static_cast<size_t>(core)].push_back(tid);
        return tid;
    }

    // --- scheduler operations --------------------------------------------

    bool prctl_query(int tid) const { return task(tid).prefetch_disable; }

    // Executes in the calling task's context; the new state is applied to
    // the sharing domain before the task's next action.
    void prctl_set(int tid, bool on) {
        Task& t = task_ref(tid);
        if (t.state != TaskState::running || !t.core)
            throw std::logic_error("prctl_set: task is not running");
        int core = *t.core;
        t.prefetch_disable = on;
        mask_[static_cast<size_t>(core)] = on;
        recompute_enablement(topo_.domain_of(core), core);
        log_event(core, on ? EventKind::prctl_set : EventKind::prctl_clear, tid);
    }

    // Install `next` as the running task on `core`. The previous task (if
    // any) goes to the back of the core's queue.
    void context_switch(int core, int next_tid) {
        check_core(core);
        Task& next = task_ref(next_tid);
        if (next.state != TaskState::runnable)
            throw std::logic_error("context_switch: next task is not runnable");
        int prev_tid = current_[static_cast<size_t>(core)];
        if (prev_tid == next_tid) return;

        remove_from_queues(next_tid);
        if (prev_tid >= 0) {
            Task& prev = task_ref(prev_tid);
            prev.state = TaskState::runnable;
            prev.core.reset();
            prev.ticks_in_slice = 0;
            queues_[static_cast<size_t>(core)].push_back(prev_tid);
            ++switch_counter_;
        }
        install(core, next);
        if (cfg_.scheduler.clear_prefetcher_on_switch)
            reset_state(prefs_[static_cast<size_t>(topo_.domain_of(core))]);
        recompute_enablement(topo_.domain_of(core), core);
        log_event(core, prev_tid >= 0 ? EventKind::sw : EventKind::run, next_tid);
    }

    // Make `core` idle; the running task returns to the queue.
    void deschedule(int core) {
        check_core(core);
        int tid = current_[static_cast<size_t>(core)];
        if (tid < 0) return;
        Task& t = task_ref(tid);
        t.state = TaskState::runnable;
        t.core.reset();
        t.ticks_in_slice = 0;
        queues_[static_cast<size_t>(core)].push_back(tid);
        current_[static_cast<size_t>(core)] = -1;
        mask_[static_cast<size_t>(core)] = false;
        recompute_enablement(topo_.domain_of(core), core);
    }

    // Deschedule from wherever the task lives and install it as the running
    // task on the target core; both affected domains are recomputed once,
    // after the move, so an intra-domain migration costs zero toggles.
    void migrate(int tid, int to_core) {
        check_core(to_core);
        Task& t = task_ref(tid);
        if (t.state == TaskState::finished)
            throw std::logic_error("migrate: task already finished");
        if (t.core && *t.core == to_core) return;

        std::optional<int> from_core = t.core;
        if (from_core) {
            current_[static_cast<size_t>(*from_core)] = -1;
            mask_[static_cast<size_t>(*from_core)] = false;
        } else {
            remove_from_queues(tid);
        }

        int prev_tid = current_[static_cast<size_t>(to_core)];
        if (prev_tid >= 0) {
            Task& prev = task_ref(prev_tid);
            prev.state = TaskState::runnable;
            prev.core.reset();
            prev.ticks_in_slice = 0;
            queues_[static_cast<size_t>(to_core)].push_back(prev_tid);
            ++switch_counter_;
        }
        install(to_core, t);

        // Both bits are in place; recompute each affected domain once. An
        // intra-domain move therefore never toggles.
        int to_domain = topo_.domain_of(to_core);
        if (from_core) recompute_enablement(topo_.domain_of(*from_core), *from_core);
        if (!from_core || topo_.domain_of(*from_core) != to_domain)
            recompute_enablement(to_domain, to_core);
        log_event(to_core, EventKind::migrate, tid);
    }

    // A domain's prefetcher may be enabled iff no core in it has its mask
    // bit set. Pure function of the mask.
    bool enablement_law(int domain) const {
        for (int c : topo_.domain_cores(domain))
            if (mask_[static_cast<size_t>(c)]) return false;
        return true;
    }

    // --- time -------------------------------------------------------------

    // One tick: each core (in id order) dispatches if idle, then executes one
    // action of its running task. Yield, script end, and quantum expiry hand
    // the core to the next queued task.
    void step() {
        int n = topo_.logical_cores();
        for (int core = 0; core < n; ++core) {
            size_t ci = static_cast<size_t>(core);
            if (current_[ci] < 0 && !queues_[ci].empty())
                context_switch(core, queues_[ci].front());
            if (current_[ci] < 0) continue;

            int tid = current_[ci];
            execute_one_action(core, tid);
            if (current_[ci] != tid) continue; // action switched things itself

            Task& t = task_ref(tid);
            if (t.done()) {
                finish_task(core, t);
                continue;
            }
            if (t.ticks_in_slice >= cfg_.scheduler.quantum && !queues_[ci].empty())
                context_switch(core, queues_[ci].front());
        }
        apply_noise();
        ++tick_;
        for (int d = 0; d < topo_.domain_count(); ++d)
            if (!is_enabled(prefs_[static_cast<size_t>(d)]))
                ++disabled_ticks_[static_cast<size_t>(d)];
    }

    // Run until every task finished (or the tick cap trips).
    void run(uint64_t max_ticks = 1'000'000) {
        while (!all_finished()) {
            if (tick_ >= max_ticks)
                throw InvariantViolation("engine: tick cap exceeded");
            step();
        }
    }

    bool all_finished() const {
        for (const auto& t : tasks_)
            if (t.state != TaskState::finished) return false;
        return true;
    }

    // Checker hook: execute exactly one action of the task running on `core`,
    // with no dispatch and no quantum policy.
    void checker_step_core(int core) {
        check_core(core);
        int tid = current_[static_cast<size_t>(core)];
        if (tid < 0) throw std::logic_error("checker_step_core: core is idle");
        execute_one_action(core, tid);
        if (current_[static_cast<size_t>(core)] == tid) {
            Task& t = task_ref(tid);
            if (t.done()) finish_task(core, t);
        }
    }

    // --- accessors ---------------------------------------------------------

    const EngineConfig& config() const { return cfg_; }
    const Topology& topology() const { return topo_; }
    uint64_t tick() const { return tick_; }
    uint64_t switch_count() const { return switch_counter_; }
    uint64_t toggle_count() const { return toggle_counter_; }
    const std::vector<uint64_t>& domain_disabled_ticks() const { return disabled_ticks_; }

    Cache& domain_cache(int d) { return caches_.at(static_cast<size_t>(d)); }
    const Cache& domain_cache(int d) const { return caches_.at(static_cast<size_t>(d)); }
    Prefetcher& domain_prefetcher(int d) { return prefs_.at(static_cast<size_t>(d)); }
    const Prefetcher& domain_prefetcher(int d) const { return prefs_.at(static_cast<size_t>(d)); }

    const Task& task(int tid) const {
        if (tid < 0 || tid >= static_cast<int>(tasks_.size()))
            throw std::out_of_range("engine: bad task id");
        return tasks_[static_cast<size_t>(tid)];
    }
    int task_count() const { return static_cast<int>(tasks_.size()); }
    int running_on(int core) const {
        check_core(core);
        return current_[static_cast<size_t>(core)];
    }
    const std::deque<int>& queue(int core) const {
        check_core(core);
        return queues_[static_cast<size_t>(core)];
    }

    const std::vector<bool>& mask() const { return mask_; }

    // Mask recomputed from task states, for soundness checks.
    std::vector<bool> mask_from_scratch() const {
        std::vector<bool> m(static_cast<size_t>(topo_.logical_cores()), false);
        for (const auto& t : tasks_)
            if (t.state == TaskState::running && t.core)
                m[static_cast<size_t>(*t.core)] = t.prefetch_disable;
        return m;
    }

    const std::vector<Event>& events() const { return events_; }
    const std::vector<ProbeRecord>& probes() const { return probes_; }
    const std::vector<RequestRecord>& request_trace() const { return requests_; }

    // Consecutive duplicate (stage, tid) records are collapsed at insert.
    const std::vector<StageRecord>& stage_trace() const { return stages_; }

    uint64_t total_access_latency(int tid) const {
        auto it = latency_sum_.find(tid);
        return it == latency_sum_.end() ? 0 : it->second;
    }
    uint64_t prctl_calls(int tid) const {
        auto it = prctl_calls_.find(tid);
        return it == prctl_calls_.end() ? 0 : it->second;
    }

    void set_tracing(bool on) { tracing_ = on; }

    // Fired after every logged scheduler event (tracing on or off).
    std::function<void(const Event&)> event_hook;

    // --- simulated memory ---------------------------------------------------

    void poke_word(uint64_t addr, uint64_t value) { memory_[addr & ~7ull] = value; }
    uint64_t peek_word(uint64_t addr) const {
        auto it = memory_.find(addr & ~7ull);
        return it == memory_.end() ? 0 : it->second;
    }

  private:
    static Prefetcher make_prefetcher(const PrefetcherSetup& s) {
        switch (s.family) {
            case PrefFamily::ip_stride: return StridePrefetcher(s.stride);
            case PrefFamily::sms: return SmsPrefetcher(s.sms);
            case PrefFamily::dmp: return DmpPrefetcher(s.dmp);
            case PrefFamily::xpt: break;
        }
        throw ConfigError("engine: unsupported prefetcher family");
    }

    void check_core(int core) const {
        if (core < 0 || core >= topo_.logical_cores())
            throw std::out_of_range("engine: bad core id");
    }

    Task& task_ref(int tid) {
        if (tid < 0 || tid >= static_cast<int>(tasks_.size()))
            throw std::out_of_range("engine: bad task id");
        return tasks_[static_cast<size_t>(tid)];
    }

    void install(int core, Task& t) {
        t.state = TaskState::running;
        t.core = core;
        t.ticks_in_slice = 0;
        current_[static_cast<size_t>(core)] = t.tid;
        mask_[static_cast<size_t>(core)] = t.prefetch_disable;
    }

    void remove_from_queues(int tid) {
        for (auto& q : queues_) {
            for (auto it = q.begin(); it != q.end(); ++it) {
                if (*it == tid) {
                    q.erase(it);
                    return;
                }
            }
        }
    }

    void finish_task(int core, Task& t) {
        t.state = TaskState::finished;
        t.core.reset();
        current_[static_cast<size_t>(core)] = -1;
        mask_[static_cast<size_t>(core)] = false;
        recompute_enablement(topo_.domain_of(core), core);
        log_event(core, EventKind::finish, t.tid);
    }

    // Applies the enablement decision to the domain's prefetcher.
    // trigger_core is the core whose event caused the recompute; only the
    // deliberately broken per-core policy looks at it.
    void recompute_enablement(int domain, int trigger_core) {
        bool want;
        if (cfg_.force_prefetcher_off)
            want = false;
        else if (cfg_.scheduler.policy == EnablementPolicy::per_core_broken)
            want = !mask_[static_cast<size_t>(trigger_core)];
        else
            want = enablement_law(domain);
        Prefetcher& p = prefs_[static_cast<size_t>(domain)];
        if (is_enabled(p) != want) {
            set_enabled(p, want);
            ++toggle_counter_;
        }
    }

    void execute_one_action(int core, int tid) {
        Task& t = task_ref(tid);
        if (t.done()) return;
        const Action& a = t.program[t.ip];
        ++t.ip;
        ++t.ticks_in_slice;

        if (a.stage != StageLabel::none) {
            StageRecord rec{a.stage, tid};
            if (stages_.empty() || !(stages_.back() == rec)) stages_.push_back(rec);
        }

        switch (a.kind) {
            case ActionKind::access: do_access(core, t, a); break;
            case ActionKind::write: poke_word(a.addr, a.value); break;
            case ActionKind::flush:
                caches_[static_cast<size_t>(topo_.domain_of(core))].flush(a.addr);
                break;
            case ActionKind::prctl:
                prctl_set(tid, a.flag_on);
                ++prctl_calls_[tid];
                break;
            case ActionKind::yield: {
                size_t ci = static_cast<size_t>(core);
                if (!queues_[ci].empty()) {
                    int next = queues_[ci].front();
                    context_switch(core, next);
                }
                break;
            }
            case ActionKind::nop: break;
            case ActionKind::spawn: do_spawn(core, t, a); break;
        }
    }

    void do_access(int core, Task& t, const Action& a) {
        int domain = topo_.domain_of(core);
        Cache& cache = caches_[static_cast<size_t>(domain)];
        uint64_t latency = cache.access(a.addr);
        latency_sum_[t.tid] += latency;

        MemoryAccess acc;
        acc.pc = a.pc;
        acc.vaddr = a.addr;
        acc.core = core;
        acc.task = t.tid;
        auto stored = memory_.find(a.addr & ~7ull);
        if (stored != memory_.end()) acc.value = stored->second;

        std::vector<uint64_t> contents;
        if (cfg_.prefetcher.family == PrefFamily::dmp)
            contents = line_words(a.addr);
        auto reqs = observe(prefs_[static_cast<size_t>(domain)], acc, contents);
        for (const auto& r : reqs) cache.install(r.target);

        if (tracing_ && (!reqs.empty() || trace_all_requests_))
            requests_.push_back({tick_, core, t.tid, a.pc, a.addr,
                                 static_cast<int>(reqs.size())});
        if (a.record_tag >= 0)
            probes_.push_back({tick_, t.tid, a.record_tag, a.addr, latency,
                               latency == cfg_.cache.latency_hit});
    }

    void do_spawn(int core, Task& parent, const Action& a) {
        int tid = static_cast<int>(tasks_.size());
        Task child;
        child.tid = tid;
        child.prefetch_disable = parent.prefetch_disable; // inheritance
        if (a.child) child.program = *a.child;
        tasks_.push_back(std::move(child));
        queues_[static_cast<size_t>(core)].push_back(tid);
        log_event(core, EventKind::spawn, tid);
    }

    std::vector<uint64_t> line_words(uint64_t addr) const {
        uint64_t ls = static_cast<uint64_t>(cfg_.cache.line_size);
        uint64_t base = addr & ~(ls - 1);
        std::vector<uint64_t> words;
        words.reserve(ls / 8);
        for (uint64_t off = 0; off < ls; off += 8) words.push_back(peek_word(base + off));
        return words;
    }

    void apply_noise() {
        if (cfg_.noise_flush_rate <= 0.0) return;
        for (int d = 0; d < topo_.domain_count(); ++d) {
            double draw = double(noise_rng_.next() >> 11) * 0x1.0p-53;
            if (draw < cfg_.noise_flush_rate) {
                uint64_t line = noise_rng_.next_below(
                    static_cast<uint64_t>(cfg_.cache.sets) *
                    static_cast<uint64_t>(cfg_.cache.ways) * 4ull);
                caches_[static_cast<size_t>(d)].flush(
                    line * static_cast<uint64_t>(cfg_.cache.line_size));
            }
        }
    }

    void log_event(int core, EventKind kind, int tid) {
        int domain = topo_.domain_of(core);
        Event e{tick_, core, kind, tid, domain,
                is_enabled(prefs_[static_cast<size_t>(domain)])};
        if (tracing_) events_.push_back(e);
        if (event_hook) event_hook(e);
    }

    EngineConfig cfg_;
    Topology topo_;
    std::vector<Cache> caches_;
    std::vector<Prefetcher> prefs_;
    std::vector<Task> tasks_;
    std::vector<std::deque<int>> queues_;
    std::vector<int> current_; // -1 = idle
    std::vector<bool> mask_;
    std::unordered_map<uint64_t, uint64_t> memory_;
    std::unordered_map<int, uint64_t> latency_sum_;
    std::unordered_map<int, uint64_t> prctl_calls_;

    uint64_t tick_ = 0;
    uint64_t switch_counter_ = 0;
    uint64_t toggle_counter_ = 0;
    std::vector<uint64_t> disabled_ticks_;

    bool tracing_ = true;
    bool trace_all_requests_ = false;
    std::vector<Event> events_;
    std::vector<ProbeRecord> probes_;
    std::vector<RequestRecord> requests_;
    std::vector<StageRecord> stages_;

    Xorshift64Star noise_rng_;
};

} // namespace prefsim
