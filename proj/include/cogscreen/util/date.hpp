#pragma once

#include <string>
#include <string_view>

namespace cogscreen {

/// Proleptic Gregorian calendar date.
struct Date {
    int year = 1970;
    int month = 1;
    int day = 1;

    /// Accepts "YYYY-MM-DD", optionally followed by a 'T' time part which is ignored.
    static Date parse(std::string_view text);
    std::string to_string() const;

    auto operator<=>(const Date&) const = default;
};

/// Whole years elapsed from `birth` to `reference` (floor); negative if birth is later.
int age_in_years(const Date& birth, const Date& reference);

}  // namespace cogscreen
