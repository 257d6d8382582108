#pragma once

#include <stdexcept>
#include <string>

namespace gsattack {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Caller passed something outside an operation's contract.
class ArgumentError : public Error {
public:
    using Error::Error;
};

// Operation invoked on an object that is not in the required state
// (for example sorting a population that has not been evaluated).
class StateError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// Malformed or incomplete PLY header. property() names the offending field.
class FormatError : public Error {
public:
    FormatError(std::string property, const std::string& message)
        : Error(message), property_(std::move(property)) {}

    const std::string& property() const noexcept { return property_; }

private:
    std::string property_;
};

// The file declares more elements than its body holds.
class TruncationError : public Error {
public:
    using Error::Error;
};

}  // namespace gsattack
