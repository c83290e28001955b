#pragma once

#include <string>

namespace prefsim {

// The five-stage vocabulary shared by the attack catalog and the
// instrumented scenarios.
enum class StageLabel {
    none, // unlabeled action
    s1_prepare,
    s2_reset,
    s3_train,
    s4_trigger,
    s5_extract,
    nop,
};

enum class ExecContext { attacker, victim };

inline std::string to_string(StageLabel s) {
    switch (s) {
        case StageLabel::none: return "none";
        case StageLabel::s1_prepare: return "S1";
        case StageLabel::s2_reset: return "S2";
        case StageLabel::s3_train: return "S3";
        case StageLabel::s4_trigger: return "S4";
        case StageLabel::s5_extract: return "S5";
        case StageLabel::nop: return "NOP";
    }
    return "?";
}

inline std::string to_string(ExecContext c) {
    return c == ExecContext::attacker ? "attacker" : "victim";
}

} // namespace prefsim
