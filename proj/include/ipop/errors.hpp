#pragma once

#include <stdexcept>
#include <string>

namespace ipop {

/// Argument outside the mathematical domain of an operation (negative depth,
/// zero capacitance, displacement beyond the stoppers, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Integration diverged or a conservation check failed.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid run configuration. The message may hold several newline-separated
/// diagnostics, each prefixed with its line number when known.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace ipop
