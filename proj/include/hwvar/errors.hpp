#pragma once

#include <stdexcept>
#include <string>

namespace hwvar {

/// Bad user input: malformed files, out-of-range parameters. CLI exit code 2.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical guarantee the algorithms rely on was violated. CLI exit code 3.
class IntegrityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of a function (e.g. |z| >= 1).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Lazy coefficient lookup hit an index that has not been filled yet.
class CoefficientNotComputed : public std::out_of_range {
public:
    explicit CoefficientNotComputed(long k)
        : std::out_of_range("coefficient not computed, k=" + std::to_string(k)), index(k) {}
    long index;
};

} // namespace hwvar
