#pragma once

#include <stdexcept>
#include <string>

namespace plsa {

// Bad arguments: wrong dimensions, out-of-range tuning values, malformed input.
class InvalidInput : public std::invalid_argument {
public:
    explicit InvalidInput(const std::string& what) : std::invalid_argument(what) {}
};

// Data that parses but cannot be used (missing files, inconsistent grids).
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// An algorithm failed to produce a trustworthy number.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace plsa
