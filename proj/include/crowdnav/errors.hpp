#pragma once

#include <stdexcept>
#include <string>

namespace crowdnav {

// Violated precondition or API misuse (caller bug).
class ContractViolation : public std::logic_error {
public:
    explicit ContractViolation(const std::string& what) : std::logic_error(what) {}
};

// Bad input data (scenario files, configs, CLI arguments).
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Velocity command outside the platform limits.
class LimitsError : public std::runtime_error {
public:
    explicit LimitsError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace crowdnav
