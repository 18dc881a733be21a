#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace cellsynth {

/// Base error for everything thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad user input (malformed files, out-of-domain values, missing flags).
/// The CLI maps this to exit code 2.
class ValidationError : public Error {
public:
    using Error::Error;
};

using Vec2 = Eigen::Vector2d;

inline constexpr int kNumStages = 6;

/// Mitotic stage, numbered as in the conditioning labels.
enum class Stage : std::uint8_t {
    interphase = 1,
    prophase = 2,
    prometaphase = 3,
    metaphase = 4,
    anaphase = 5,
    telophase = 6,
};

constexpr int to_int(Stage s) { return static_cast<int>(s); }

/// Zero-based index into per-stage tables.
constexpr std::size_t index_of(Stage s) { return static_cast<std::size_t>(s) - 1; }

constexpr Stage stage_at(std::size_t index) { return static_cast<Stage>(index + 1); }

/// Throws ValidationError unless 1 <= value <= 6.
Stage stage_from_int(long long value);

const char* stage_name(Stage s);

template <class T>
using PerStage = std::array<T, kNumStages>;

}  // namespace cellsynth
