#include "cogscreen/util/date.hpp"

#include <chrono>
#include <cstdio>

#include "cogscreen/error.hpp"

namespace cogscreen {

Date Date::parse(std::string_view text) {
    auto digits = [&](std::size_t pos, std::size_t len) {
        int v = 0;
        for (std::size_t i = pos; i < pos + len; ++i) {
            if (i >= text.size() || text[i] < '0' || text[i] > '9') {
                throw DataError("invalid ISO-8601 date '" + std::string(text) + "'");
            }
            v = v * 10 + (text[i] - '0');
        }
        return v;
    };
    if (text.size() < 10 || text[4] != '-' || text[7] != '-' ||
        (text.size() > 10 && text[10] != 'T' && text[10] != ' ')) {
        throw DataError("invalid ISO-8601 date '" + std::string(text) + "'");
    }
    Date d{digits(0, 4), digits(5, 2), digits(8, 2)};
    const std::chrono::year_month_day ymd{std::chrono::year{d.year},
                                          std::chrono::month{static_cast<unsigned>(d.month)},
                                          std::chrono::day{static_cast<unsigned>(d.day)}};
    if (!ymd.ok()) throw DataError("invalid calendar date '" + std::string(text) + "'");
    return d;
}

std::string Date::to_string() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", year, month, day);
    return buf;
}

int age_in_years(const Date& birth, const Date& reference) {
    int years = reference.year - birth.year;
    if (reference.month < birth.month ||
        (reference.month == birth.month && reference.day < birth.day)) {
        --years;
    }
    return years;
}

}  // namespace cogscreen
