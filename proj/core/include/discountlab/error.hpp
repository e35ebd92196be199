#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace discountlab {

enum class Errc {
    BadDimension,
    BadResolution,
    EtaOutsideY,
    MissingCost,
    NoConvergence,
    SingularSystem,
    NotASubsolution,
    NotASupersolution,
    NumericalBreakdown,
    EmptySampleSet,
    MissingRadius,
    Precondition,
    Unbounded,
    Infeasible,
    ParseError,
    UnknownKey,
    BadValue,
    Io,
    BadSystemFile,
};

std::string_view to_string(Errc code) noexcept;

/// Base exception for every failure raised by the library. The code is stable
/// and is what the CLI reports in its structured error record.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

inline void require(bool condition, const char* message) {
    if (!condition) throw Error(Errc::Precondition, message);
}

} // namespace discountlab
