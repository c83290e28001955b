#pragma once

#include <stdexcept>
#include <string>

namespace prefsim {

// Error categories map 1:1 onto CLI exit codes:
//   0 ok, 2 config error, 3 invariant violation, 4 I/O error.

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
    static constexpr int exit_code = 2;
};

struct InvariantViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
    static constexpr int exit_code = 3;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
    static constexpr int exit_code = 4;
};

} // namespace prefsim
