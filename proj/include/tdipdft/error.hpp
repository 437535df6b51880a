#pragma once

#include <stdexcept>
#include <string>

namespace tdipdft {

// Invalid parameters, malformed specs or config files.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// The spectral history does not reach far enough back yet.
class InsufficientHistory : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// The spectrum has no usable peak (all-zero or flat input).
class NoTone : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// The interpolation peak lies on the edge of the stored bin range.
class InsufficientNeighbors : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

// Delay gain sigma+ vanished, so the positive image cannot be inverted.
class QuadratureDegenerate : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A step series never crossed the 50% level.
class UndefinedDelay : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace tdipdft
