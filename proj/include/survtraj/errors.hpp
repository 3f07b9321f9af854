#pragma once

#include <stdexcept>
#include <string>

namespace survtraj {

// Base for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Incompatible tensor shapes fed to a primitive.
class ShapeError : public Error {
public:
    using Error::Error;
};

// A forward op produced NaN/Inf, or training hit a non-finite loss.
class NumericError : public Error {
public:
    using Error::Error;
};

// A documented precondition was violated by the caller.
class ContractError : public Error {
public:
    using Error::Error;
};

// Malformed input data (CSV cells, schema mismatches, bad config files).
class DataError : public Error {
public:
    using Error::Error;
};

}  // namespace survtraj
