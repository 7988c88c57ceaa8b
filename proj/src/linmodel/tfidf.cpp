#include "cogscreen/linmodel/tfidf.hpp"

#include <cmath>
#include <set>
#include <unordered_map>

#include "cogscreen/error.hpp"

namespace cogscreen::linmodel {

using io::Json;

TfidfModel fit_tfidf(std::span<const std::vector<std::string>> docs) {
    if (docs.empty()) throw DataError("TF-IDF needs at least one document");
    std::map<std::string, std::size_t> df;
    bool any_tokens = false;
    for (const auto& doc : docs) {
        std::set<std::string_view> seen(doc.begin(), doc.end());
        for (auto t : seen) ++df[std::string(t)];
        any_tokens = any_tokens || !doc.empty();
    }
    if (!any_tokens) throw DataError("TF-IDF needs at least one non-empty document");

    TfidfModel m;
    m.doc_count = docs.size();
    const double n = static_cast<double>(docs.size());
    for (const auto& [term, count] : df) {
        m.vocabulary.emplace(term, static_cast<std::uint32_t>(m.terms.size()));
        m.terms.push_back(term);
        m.document_frequency.push_back(count);
        m.idf.push_back(std::log(n / static_cast<double>(count)));
    }
    return m;
}

SparseVector transform(const TfidfModel& model, std::span<const std::string> doc) {
    SparseVector v;
    v.dimension = model.dimension();
    if (doc.empty()) return v;
    std::unordered_map<std::uint32_t, std::size_t> counts;
    for (const auto& t : doc) {
        auto it = model.vocabulary.find(t);
        if (it != model.vocabulary.end()) ++counts[it->second];
    }
    const double total = static_cast<double>(doc.size());
    std::vector<std::pair<std::uint32_t, double>> pairs;
    pairs.reserve(counts.size());
    for (const auto& [col, c] : counts) {
        pairs.emplace_back(col, (static_cast<double>(c) / total) * model.idf[col]);
    }
    return SparseVector::from_pairs(v.dimension, std::move(pairs));
}

Json to_json(const TfidfModel& m) {
    Json j{{"terms", m.terms},
           {"idf", m.idf},
           {"document_frequency", m.document_frequency},
           {"doc_count", m.doc_count}};
    j["selected"] = m.selected ? Json(*m.selected) : Json();
    return j;
}

TfidfModel tfidf_from_json(const Json& j) {
    TfidfModel m;
    m.terms = io::require<std::vector<std::string>>(j, "terms");
    m.idf = io::require<std::vector<double>>(j, "idf");
    m.document_frequency = j.value("document_frequency", std::vector<std::size_t>{});
    m.doc_count = io::require<std::size_t>(j, "doc_count");
    if (m.idf.size() != m.terms.size()) throw DataError("tfidf terms/idf length mismatch");
    for (std::size_t i = 0; i < m.terms.size(); ++i) {
        if (!m.vocabulary.emplace(m.terms[i], static_cast<std::uint32_t>(i)).second) {
            throw DataError("duplicate vocabulary term '" + m.terms[i] + "'");
        }
    }
    if (j.contains("selected") && !j["selected"].is_null()) {
        m.selected = j["selected"].get<std::vector<bool>>();
        if (m.selected->size() != m.terms.size()) throw DataError("selection mask length mismatch");
    }
    return m;
}

}  // namespace cogscreen::linmodel
