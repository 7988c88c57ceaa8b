#include "cogscreen/types.hpp"

#include <cmath>

#include "cogscreen/error.hpp"

namespace cogscreen {

std::string_view to_string(Label label) {
    switch (label) {
        case Label::neither: return "neither";
        case Label::negative: return "negative";
        case Label::positive: return "positive";
    }
    return "neither";
}

std::optional<Label> parse_label(std::string_view text) {
    if (text == "neither" || text == "0") return Label::neither;
    if (text == "negative" || text == "1") return Label::negative;
    if (text == "positive" || text == "2") return Label::positive;
    return std::nullopt;
}

Label label_from_int(int value) {
    if (value < 0 || value > 2) {
        throw DataError("label value out of range: " + std::to_string(value));
    }
    return static_cast<Label>(value);
}

double ClassProbs::operator[](Label label) const {
    switch (label) {
        case Label::neither: return p_neither;
        case Label::negative: return p_negative;
        case Label::positive: return p_positive;
    }
    return 0.0;
}

Label ClassProbs::argmax() const {
    // >= so later (higher) classes win ties.
    Label best = Label::neither;
    double best_p = p_neither;
    if (p_negative >= best_p) {
        best = Label::negative;
        best_p = p_negative;
    }
    if (p_positive >= best_p) best = Label::positive;
    return best;
}

bool ClassProbs::valid(double tol) const {
    for (double p : as_array()) {
        if (!std::isfinite(p) || p < 0.0 || p > 1.0) return false;
    }
    return std::abs(p_neither + p_negative + p_positive - 1.0) <= tol;
}

}  // namespace cogscreen
