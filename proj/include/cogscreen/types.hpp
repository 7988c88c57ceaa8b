#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace cogscreen {

/// Three-class sequence label. Integer values are the canonical encoding
/// used in every file and model.
enum class Label : int { neither = 0, negative = 1, positive = 2 };

inline constexpr int kNumClasses = 3;

std::string_view to_string(Label label);
std::optional<Label> parse_label(std::string_view text);
Label label_from_int(int value);  // throws DataError outside 0..2

/// Per-sequence class probabilities, indexed by Label value.
struct ClassProbs {
    double p_neither = 0.0;
    double p_negative = 0.0;
    double p_positive = 0.0;

    double operator[](Label label) const;
    std::array<double, 3> as_array() const { return {p_neither, p_negative, p_positive}; }

    /// Highest-probability class; ties resolve toward the higher class index.
    Label argmax() const;

    /// Each entry in [0,1] and sum within tol of 1.
    bool valid(double tol = 1e-9) const;

    bool operator==(const ClassProbs&) const = default;
};

}  // namespace cogscreen
