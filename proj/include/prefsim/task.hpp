#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "prefsim/stage.hpp"

namespace prefsim {

struct Action;
using Program = std::vector<Action>;

enum class ActionKind {
    access, // load; touches cache and prefetcher
    write,  // store a word to simulated memory; no cache/prefetcher effect
    flush,  // evict a line from the local domain cache
    prctl,  // set or clear the calling task's prefetch_disable flag
    yield,  // give up the core voluntarily
    nop,    // burn one tick
    spawn,  // create a child task (inherits the flag)
};

struct Action {
    ActionKind kind = ActionKind::nop;
    uint64_t pc = 0;
    uint64_t addr = 0;
    uint64_t value = 0;
    bool flag_on = false;
    std::shared_ptr<const Program> child; // spawn payload
    int record_tag = -1;                  // >= 0: log this access's latency
    StageLabel stage = StageLabel::none;
};

inline Action make_access(uint64_t pc, uint64_t addr,
                          StageLabel stage = StageLabel::none,
                          int record_tag = -1) {
    Action a;
    a.kind = ActionKind::access;
    a.pc = pc;
    a.addr = addr;
    a.stage = stage;
    a.record_tag = record_tag;
    return a;
}

inline Action make_write(uint64_t addr, uint64_t value,
                         StageLabel stage = StageLabel::none) {
    Action a;
    a.kind = ActionKind::write;
    a.addr = addr;
    a.value = value;
    a.stage = stage;
    return a;
}

inline Action make_flush(uint64_t addr, StageLabel stage = StageLabel::none) {
    Action a;
    a.kind = ActionKind::flush;
    a.addr = addr;
    a.stage = stage;
    return a;
}

inline Action make_prctl(bool on) {
    Action a;
    a.kind = ActionKind::prctl;
    a.flag_on = on;
    return a;
}

inline Action make_yield() {
    Action a;
    a.kind = ActionKind::yield;
    return a;
}

inline Action make_nop() { return Action{}; }

inline Action make_spawn(Program child) {
    Action a;
    a.kind = ActionKind::spawn;
    a.child = std::make_shared<const Program>(std::move(child));
    return a;
}

enum class TaskState { runnable, running, finished };

// One simulated process. The flag starts cleared for tasks created without a
// parent; only the task's own prctl actions or spawn inheritance change it.
struct Task {
    int tid = 0;
    bool prefetch_disable = false;
    Program program;
    size_t ip = 0; // next action index
    TaskState state = TaskState::runnable;
    std::optional<int> core;
    int ticks_in_slice = 0;
    bool privileged = false; // kernel/TEE classification only; no engine effect

    bool done() const { return ip >= program.size(); }
};

} // namespace prefsim
