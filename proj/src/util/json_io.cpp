#include "cogscreen/util/json_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

#include "cogscreen/error.hpp"

namespace cogscreen::io {

namespace fs = std::filesystem;

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void for_each_jsonl_text(std::string_view text, std::string_view source_name,
                         const std::function<void(const Json&, std::size_t)>& fn) {
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        std::string_view line = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
        Json j;
        try {
            j = Json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw DataError(std::string(source_name) + ":" + std::to_string(line_no) +
                            ": malformed JSON line");
        }
        if (!j.is_object()) {
            throw DataError(std::string(source_name) + ":" + std::to_string(line_no) +
                            ": expected a JSON object");
        }
        try {
            fn(j, line_no);
        } catch (const DataError& e) {
            throw DataError(std::string(source_name) + ":" + std::to_string(line_no) + ": " +
                            e.what());
        } catch (const nlohmann::json::exception& e) {
            throw DataError(std::string(source_name) + ":" + std::to_string(line_no) + ": " +
                            e.what());
        }
    }
}

void for_each_jsonl(const fs::path& path,
                    const std::function<void(const Json&, std::size_t)>& fn) {
    const std::string text = read_file(path);
    for_each_jsonl_text(text, path.string(), fn);
}

Json parse_json_file(const fs::path& path) {
    const std::string text = read_file(path);
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::parse_error&) {
        throw DataError("malformed JSON in '" + path.string() + "'");
    }
}

std::string dump_line(const Json& j) { return j.dump(-1, ' ', false, Json::error_handler_t::strict); }

std::string dump_pretty(const Json& j) { return j.dump(2) + "\n"; }

void write_file_atomic(const fs::path& path, std::string_view content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write '" + tmp.string() + "'");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            std::error_code ec;
            fs::remove(tmp, ec);
            throw DataError("write failed for '" + path.string() + "'");
        }
    }
    fs::rename(tmp, path);
}

OutputSet::~OutputSet() {
    if (committed_) return;
    for (const auto& s : staged_) {
        std::error_code ec;
        fs::remove(s.temp, ec);
    }
}

void OutputSet::stage(const fs::path& path, std::string content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".partial";
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw DataError("write failed for '" + path.string() + "'");
    staged_.push_back({path, tmp});
}

void OutputSet::commit() {
    for (const auto& s : staged_) fs::rename(s.temp, s.target);
    committed_ = true;
}

Json number_or_inf(double value) {
    if (std::isinf(value)) return value > 0 ? Json("inf") : Json("-inf");
    return value;
}

double parse_number_or_inf(const Json& j) {
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf") return INFINITY;
        if (s == "-inf") return -INFINITY;
        throw DataError("expected a number, got '" + s + "'");
    }
    return j.get<double>();
}

}  // namespace cogscreen::io
