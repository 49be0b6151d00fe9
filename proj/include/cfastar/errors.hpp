#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace cfastar {

// Base of every error raised by the library. Each subclass maps to one
// failure category; the CLI turns them into exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed arguments: wrong dimensions, non-finite values, bad ranges.
class InvalidInput : public Error {
public:
    using Error::Error;
};

// The model itself is broken (non-positive scale, inconsistent matrices).
class ModelIntegrityError : public Error {
public:
    using Error::Error;
};

// Abducted noise does not reproduce the observed episode.
class AbductionError : public Error {
public:
    using Error::Error;
};

// An action (or sequence) exceeds the change budget k.
class InfeasibleAction : public Error {
public:
    using Error::Error;
};

// Relative improvement asked for with an observed outcome of zero.
class UndefinedImprovement : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line = 0)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// Brute-force enumeration refused because the candidate count is above the cap.
class EnumerationCapExceeded : public Error {
public:
    EnumerationCapExceeded(std::uint64_t candidates, std::uint64_t cap)
        : Error("enumeration of " + std::to_string(candidates) +
                " candidate sequences exceeds cap " + std::to_string(cap)),
          candidates_(candidates) {}

    std::uint64_t candidates() const noexcept { return candidates_; }

private:
    std::uint64_t candidates_;
};

}  // namespace cfastar
