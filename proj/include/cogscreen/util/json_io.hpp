#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "cogscreen/error.hpp"

namespace cogscreen::io {

using Json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

std::string read_file(const std::filesystem::path& path);

/// Calls fn(object, 1-based line number) for every non-blank line. Parse
/// failures throw DataError naming the file and line.
void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(const Json&, std::size_t)>& fn);
void for_each_jsonl_text(std::string_view text, std::string_view source_name,
                         const std::function<void(const Json&, std::size_t)>& fn);

Json parse_json_file(const std::filesystem::path& path);

/// Canonical single-line dump (sorted keys, shortest round-trip doubles).
std::string dump_line(const Json& j);
std::string dump_pretty(const Json& j);

/// Writes `content` to a sibling temp file then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Stages several outputs; nothing becomes visible until commit(). Staged
/// temp files are removed if the object dies uncommitted.
class OutputSet {
public:
    OutputSet() = default;
    OutputSet(const OutputSet&) = delete;
    OutputSet& operator=(const OutputSet&) = delete;
    ~OutputSet();

    void stage(const std::filesystem::path& path, std::string content);
    void commit();

private:
    struct Staged {
        std::filesystem::path target;
        std::filesystem::path temp;
    };
    std::vector<Staged> staged_;
    bool committed_ = false;
};

/// Typed field access with DataError on absence or wrong type.
template <typename T>
T require(const Json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) {
        throw DataError(std::string("missing field '") + key + "'");
    }
    try {
        return it->get<T>();
    } catch (const nlohmann::json::exception&) {
        throw DataError(std::string("field '") + key + "' has the wrong type");
    }
}

/// JSON cannot carry infinities; they travel as the strings "inf"/"-inf".
Json number_or_inf(double value);
double parse_number_or_inf(const Json& j);

}  // namespace cogscreen::io
