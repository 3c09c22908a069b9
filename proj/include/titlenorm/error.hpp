#pragma once

#include <stdexcept>
#include <string>

namespace titlenorm {

// Error categories shared between the C++ core and the C API layer.
// The numeric values are part of the C ABI (see include/titlenorm.h).
enum class ErrorCode : int {
    ok = 0,
    invalid_argument = 1,
    io_failure = 2,
    parse_failure = 3,
    numeric_failure = 4,
    mismatch = 5,
    not_found = 6,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& what) {
    throw Error(code, what);
}

} // namespace titlenorm
