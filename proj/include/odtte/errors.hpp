#pragma once

#include <stdexcept>
#include <string>

namespace odtte {

// Error taxonomy, mapped to CLI exit codes: contract/config/usage -> 1,
// data/parse -> 2, numerical failure -> 3.
struct ContractError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ShapeError : ContractError {
    using ContractError::ContractError;
};

struct ConfigError : ContractError {
    using ContractError::ContractError;
};

struct DomainError : ContractError {
    using ContractError::ContractError;
};

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace odtte
