#include "cogscreen/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>
#include <unordered_map>

#include "cogscreen/error.hpp"
#include "cogscreen/util/rng.hpp"

namespace cogscreen::dataset {

using io::Json;

LabeledDataset::LabeledDataset(std::vector<LabeledItem> items) : items_(std::move(items)) {
    for (std::size_t i = 0; i < items_.size(); ++i) {
        const auto& it = items_[i];
        if (it.sequence.sequence_id != it.record.sequence_id) {
            throw DataError("label record does not belong to sequence '" +
                            it.sequence.sequence_id + "'");
        }
        if (!id_index_.emplace(it.sequence.sequence_id, i).second) {
            throw DataError("duplicate sequence '" + it.sequence.sequence_id + "' in dataset");
        }
        patient_index_[it.sequence.patient_id].push_back(i);
    }
}

LabeledDataset LabeledDataset::assemble(const std::vector<extract::Sequence>& sequences,
                                        const std::vector<patterns::LabelRecord>& labels) {
    std::unordered_map<std::string, const patterns::LabelRecord*> by_id;
    for (const auto& r : labels) by_id[r.sequence_id] = &r;
    std::vector<LabeledItem> items;
    for (const auto& s : sequences) {
        auto it = by_id.find(s.sequence_id);
        if (it == by_id.end()) continue;
        items.push_back({s, *it->second});
        by_id.erase(it);
    }
    if (!by_id.empty()) {
        std::string first = by_id.begin()->first;
        for (const auto& [id, _] : by_id) first = std::min(first, id);
        throw DataError("label for unknown sequence '" + first + "'");
    }
    return LabeledDataset(std::move(items));
}

std::vector<std::string> LabeledDataset::patient_ids() const {
    std::vector<std::string> ids;
    for (const auto& [id, _] : patient_index_) ids.push_back(id);
    return ids;
}

std::size_t LabeledDataset::index_of(const std::string& sequence_id) const {
    auto it = id_index_.find(sequence_id);
    if (it == id_index_.end()) throw NotFoundError("unknown sequence '" + sequence_id + "'");
    return it->second;
}

namespace {

constexpr std::size_t kStrata = 6;

std::size_t stratum_of(const patterns::LabelRecord& r) {
    return static_cast<std::size_t>(r.label) * 2 +
           (r.source == patterns::LabelSource::pattern ? 1 : 0);
}

}  // namespace

Split stratified_patient_split(const LabeledDataset& ds, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw UsageError("test_fraction must be in (0, 1)");
    }
    const auto& index = ds.patient_index();
    if (index.size() < 2) throw DataError("a split needs at least 2 patients");

    struct PatientBundle {
        std::string id;
        std::array<double, kStrata> counts{};
        std::size_t total = 0;
    };
    std::vector<PatientBundle> bundles;
    std::array<double, kStrata> targets{};
    for (const auto& [pid, items] : index) {
        PatientBundle b{pid, {}, items.size()};
        for (auto i : items) {
            const auto s = stratum_of(ds.items()[i].record);
            b.counts[s] += 1.0;
            targets[s] += test_fraction;
        }
        bundles.push_back(std::move(b));
    }

    Rng rng(seed);
    rng.shuffle(std::span(bundles));
    std::stable_sort(bundles.begin(), bundles.end(),
                     [](const auto& a, const auto& b) { return a.total > b.total; });

    std::array<double, kStrata> in_test{};
    std::vector<bool> to_test(bundles.size(), false);
    auto cost = [&](const std::array<double, kStrata>& c) {
        double sum = 0.0;
        for (std::size_t s = 0; s < kStrata; ++s) sum += (c[s] - targets[s]) * (c[s] - targets[s]);
        return sum;
    };
    for (std::size_t b = 0; b < bundles.size(); ++b) {
        auto with = in_test;
        for (std::size_t s = 0; s < kStrata; ++s) with[s] += bundles[b].counts[s];
        if (cost(with) < cost(in_test)) {
            in_test = with;
            to_test[b] = true;
        }
    }
    // Swap and toggle passes on the worst per-stratum proportion gap, keeping
    // the test side within 20% of its target size.
    double total = 0.0, target_total = 0.0;
    for (const auto& b : bundles) total += static_cast<double>(b.total);
    target_total = total * test_fraction;
    auto worst_gap = [&](const std::array<double, kStrata>& c) {
        double n = 0.0;
        for (double v : c) n += v;
        if (n <= 0.0 || std::abs(n - target_total) > 0.2 * target_total + 1e-9) return 1e300;
        double gap = 0.0;
        for (std::size_t s = 0; s < kStrata; ++s) {
            gap = std::max(gap, std::abs(c[s] / n - targets[s] / target_total));
        }
        return gap + 1e-6 * cost(c) / (target_total * target_total);
    };
    auto moved = [&](std::array<double, kStrata> c, std::size_t b, double sign) {
        for (std::size_t s = 0; s < kStrata; ++s) c[s] += sign * bundles[b].counts[s];
        return c;
    };
    double current = worst_gap(in_test);
    for (int pass = 0; pass < 20; ++pass) {
        bool improved = false;
        for (std::size_t a = 0; a < bundles.size(); ++a) {
            const auto toggled = moved(in_test, a, to_test[a] ? -1.0 : 1.0);
            if (const double g = worst_gap(toggled); g < current - 1e-12) {
                in_test = toggled;
                to_test[a] = !to_test[a];
                current = g;
                improved = true;
                continue;
            }
            if (!to_test[a]) continue;
            for (std::size_t b = 0; b < bundles.size(); ++b) {
                if (to_test[b]) continue;
                const auto swapped = moved(moved(in_test, a, -1.0), b, 1.0);
                if (const double g = worst_gap(swapped); g < current - 1e-12) {
                    in_test = swapped;
                    to_test[a] = false;
                    to_test[b] = true;
                    current = g;
                    improved = true;
                    break;
                }
            }
        }
        if (!improved) break;
    }

    // Both sides must be non-empty.
    if (std::none_of(to_test.begin(), to_test.end(), [](bool v) { return v; })) {
        to_test.back() = true;
    }
    if (std::all_of(to_test.begin(), to_test.end(), [](bool v) { return v; })) {
        to_test.front() = false;
    }

    std::set<std::string> test_patients;
    for (std::size_t b = 0; b < bundles.size(); ++b) {
        if (to_test[b]) test_patients.insert(bundles[b].id);
    }
    Split split;
    split.seed = seed;
    split.strata_definition = kStrataDefinition;
    for (const auto& item : ds.items()) {
        auto& side = test_patients.contains(item.sequence.patient_id) ? split.test : split.train;
        side.push_back(item.sequence.sequence_id);
    }
    return split;
}

std::vector<std::vector<std::string>> kfold_patient_folds(std::vector<std::string> patient_ids,
                                                          std::size_t k, std::uint64_t seed) {
    std::sort(patient_ids.begin(), patient_ids.end());
    patient_ids.erase(std::unique(patient_ids.begin(), patient_ids.end()), patient_ids.end());
    if (k < 2) throw UsageError("k must be at least 2");
    if (k > patient_ids.size()) {
        throw DataError("cannot make " + std::to_string(k) + " folds from " +
                        std::to_string(patient_ids.size()) + " patients");
    }
    Rng rng(seed);
    rng.shuffle(std::span(patient_ids));
    std::vector<std::vector<std::string>> folds(k);
    for (std::size_t i = 0; i < patient_ids.size(); ++i) folds[i % k].push_back(patient_ids[i]);
    for (auto& f : folds) std::sort(f.begin(), f.end());
    return folds;
}

LabeledDataset subset(const LabeledDataset& ds, const std::vector<std::string>& sequence_ids) {
    std::vector<std::size_t> idx;
    idx.reserve(sequence_ids.size());
    for (const auto& id : sequence_ids) idx.push_back(ds.index_of(id));
    std::sort(idx.begin(), idx.end());
    std::vector<LabeledItem> items;
    items.reserve(idx.size());
    for (auto i : idx) items.push_back(ds.items()[i]);
    return LabeledDataset(std::move(items));
}

std::string serialize(const LabeledDataset& ds) {
    std::string out = io::dump_line(Json{{"schema_version", io::kSchemaVersion},
                                         {"kind", "labeled_dataset"},
                                         {"items", ds.size()}}) +
                      "\n";
    for (const auto& item : ds.items()) {
        out += io::dump_line(Json{{"sequence", extract::to_json(item.sequence)},
                                  {"record", patterns::to_json(item.record)}}) +
               "\n";
    }
    return out;
}

LabeledDataset deserialize(std::string_view text, std::string_view source) {
    std::vector<LabeledItem> items;
    bool have_header = false;
    std::size_t expected = 0;
    io::for_each_jsonl_text(text, source, [&](const Json& j, std::size_t) {
        if (!have_header) {
            if (!j.contains("schema_version")) throw DataError("missing dataset header");
            const int version = j["schema_version"].get<int>();
            if (version != io::kSchemaVersion) {
                throw DataError("unsupported dataset schema_version " + std::to_string(version) +
                                " (expected " + std::to_string(io::kSchemaVersion) + ")");
            }
            expected = j.value("items", std::size_t{0});
            have_header = true;
            return;
        }
        items.push_back({extract::sequence_from_json(j.at("sequence")),
                         patterns::label_from_json(j.at("record"))});
    });
    if (!have_header) throw DataError(std::string(source) + ": empty dataset file");
    if (items.size() != expected) {
        throw DataError(std::string(source) + ": header promises " + std::to_string(expected) +
                        " items, found " + std::to_string(items.size()));
    }
    return LabeledDataset(std::move(items));
}

void save_dataset(const LabeledDataset& ds, const std::filesystem::path& path) {
    io::write_file_atomic(path, serialize(ds));
}

LabeledDataset load_dataset(const std::filesystem::path& path) {
    return deserialize(io::read_file(path), path.string());
}

Json to_json(const Split& s) {
    return Json{{"schema_version", io::kSchemaVersion},
                {"seed", s.seed},
                {"strata_definition", s.strata_definition},
                {"train", s.train},
                {"test", s.test}};
}

Split split_from_json(const Json& j) {
    if (j.value("schema_version", 0) != io::kSchemaVersion) {
        throw DataError("unsupported split schema_version");
    }
    Split s;
    s.seed = io::require<std::uint64_t>(j, "seed");
    s.strata_definition = j.value("strata_definition", std::string());
    s.train = io::require<std::vector<std::string>>(j, "train");
    s.test = io::require<std::vector<std::string>>(j, "test");
    return s;
}

Split load_split(const std::filesystem::path& path) {
    return split_from_json(io::parse_json_file(path));
}

}  // namespace cogscreen::dataset
