#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "cogscreen/extract.hpp"
#include "cogscreen/patterns.hpp"
#include "cogscreen/util/json_io.hpp"

namespace cogscreen::dataset {

struct LabeledItem {
    extract::Sequence sequence;
    patterns::LabelRecord record;

    bool operator==(const LabeledItem&) const = default;
};

class LabeledDataset {
public:
    LabeledDataset() = default;
    explicit LabeledDataset(std::vector<LabeledItem> items);

    /// Pairs each labeled sequence with its record; unlabeled sequences are dropped.
    /// A label naming an unknown sequence throws DataError.
    static LabeledDataset assemble(const std::vector<extract::Sequence>& sequences,
                                   const std::vector<patterns::LabelRecord>& labels);

    const std::vector<LabeledItem>& items() const { return items_; }
    std::size_t size() const { return items_.size(); }
    const std::map<std::string, std::vector<std::size_t>>& patient_index() const {
        return patient_index_;
    }
    std::vector<std::string> patient_ids() const;
    /// Item position by sequence_id; throws NotFoundError.
    std::size_t index_of(const std::string& sequence_id) const;

    bool operator==(const LabeledDataset& o) const { return items_ == o.items_; }

private:
    std::vector<LabeledItem> items_;
    std::map<std::string, std::vector<std::size_t>> patient_index_;
    std::map<std::string, std::size_t> id_index_;
};

struct Split {
    std::vector<std::string> train;  // sequence ids
    std::vector<std::string> test;
    std::uint64_t seed = 0;
    std::string strata_definition;
};

inline constexpr const char* kStrataDefinition = "label x label_source";

/// Patient-granular split; greedy largest-first so each (label, source)
/// stratum's share of test items tracks its global share.
Split stratified_patient_split(const LabeledDataset& ds, double test_fraction, std::uint64_t seed);

/// Partitions distinct patient ids into k folds of sizes differing by at most one.
std::vector<std::vector<std::string>> kfold_patient_folds(std::vector<std::string> patient_ids,
                                                          std::size_t k, std::uint64_t seed);

/// Subset of a dataset by sequence ids, in dataset order.
LabeledDataset subset(const LabeledDataset& ds, const std::vector<std::string>& sequence_ids);

std::string serialize(const LabeledDataset& ds);
LabeledDataset deserialize(std::string_view text, std::string_view source = "dataset");
void save_dataset(const LabeledDataset& ds, const std::filesystem::path& path);
LabeledDataset load_dataset(const std::filesystem::path& path);

io::Json to_json(const Split& s);
Split split_from_json(const io::Json& j);
Split load_split(const std::filesystem::path& path);

}  // namespace cogscreen::dataset
