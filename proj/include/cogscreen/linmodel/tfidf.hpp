#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cogscreen/linmodel/sparse.hpp"
#include "cogscreen/util/json_io.hpp"

namespace cogscreen::linmodel {

/// Vocabulary with natural-log IDF weights, idf[w] = ln(doc_count / df[w]).
struct TfidfModel {
    std::map<std::string, std::uint32_t> vocabulary;  // token -> column
    std::vector<std::string> terms;                   // column -> token
    std::vector<double> idf;
    std::vector<std::size_t> document_frequency;
    std::size_t doc_count = 0;
    std::optional<std::vector<bool>> selected;

    std::size_t dimension() const { return terms.size(); }
};

/// Vocabulary is every token in any doc, columns assigned in sorted token order.
TfidfModel fit_tfidf(std::span<const std::vector<std::string>> docs);

/// value(w) = (count(w, doc) / |doc|) * idf[w]; unseen tokens ignored. The
/// selection mask, if any, is not applied here.
SparseVector transform(const TfidfModel& model, std::span<const std::string> doc);

io::Json to_json(const TfidfModel& m);
TfidfModel tfidf_from_json(const io::Json& j);

}  // namespace cogscreen::linmodel
