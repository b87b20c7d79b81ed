#pragma once

#include <stdexcept>
#include <string>

namespace ckrbf {

// Bad argument values or shape mismatches (CLI exit code 1).
class ArgumentError : public std::invalid_argument {
public:
    explicit ArgumentError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Malformed or unusable input data (CLI exit code 2).
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

class ParseError : public DataError {
public:
    ParseError(const std::string& msg, long line)
        : DataError("line " + std::to_string(line) + ": " + msg), line_(line) {}
    long line() const { return line_; }

private:
    long line_;
};

// Numerical linear algebra failure, e.g. a singular matrix (CLI exit code 2).
class LinalgError : public DataError {
public:
    explicit LinalgError(const std::string& msg) : DataError(msg) {}
};

// Covariance regularization exhausted its epsilon ladder (CLI exit code 2).
class IllConditionedError : public LinalgError {
public:
    explicit IllConditionedError(const std::string& msg) : LinalgError(msg) {}
};

}  // namespace ckrbf
