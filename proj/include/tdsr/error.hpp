#pragma once

#include <stdexcept>
#include <string>

namespace tdsr {

enum class ErrorKind {
    dimension,
    contour,
    stiffness,
    insufficient_levels,
    sign,
    root_failure,
    newton_failure,
    singular,
    positivity,
    split,
    degenerate_split,
    divergence,
    stencil,
    convergence,
    instability,
    validation,
    config,
    io,
};

const char* to_string(ErrorKind kind);

/// Single exception type for the library; `kind()` tells callers (and the CLI's
/// exit-code mapping) which contract was violated.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace tdsr
