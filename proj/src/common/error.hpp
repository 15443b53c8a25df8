#pragma once

#include <stdexcept>
#include <string>

namespace ranopt {

/// Error raised by any module. The message is prefixed with the module name
/// so the CLI can report where a run failed.
class Error : public std::runtime_error {
public:
    Error(std::string module, const std::string& what)
        : std::runtime_error(module + ": " + what), module_(std::move(module)) {}

    const std::string& module() const noexcept { return module_; }

private:
    std::string module_;
};

/// S + V <= 1 or app-activation contract broken.
class ConstraintViolation : public Error {
public:
    using Error::Error;
};

/// A stage needs a file produced by an earlier stage and it is not there.
class MissingArtifact : public Error {
public:
    using Error::Error;
};

/// Training diverged or a computation produced NaN/Inf.
class NumericError : public Error {
public:
    using Error::Error;
};

} // namespace ranopt
