#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "cogscreen/extract.hpp"
#include "cogscreen/linmodel/sequence_model.hpp"
#include "cogscreen/types.hpp"

namespace cogscreen::attention {

/// Maps sequences to three-class probabilities, one per input, in input order.
class SequenceScorer {
public:
    virtual ~SequenceScorer() = default;
    virtual std::vector<ClassProbs> score(std::span<const extract::Sequence> batch) = 0;
    virtual std::string kind() const = 0;
};

class LinearScorer : public SequenceScorer {
public:
    explicit LinearScorer(linmodel::SequenceModel model) : model_(std::move(model)) {}
    std::vector<ClassProbs> score(std::span<const extract::Sequence> batch) override;
    std::string kind() const override { return "linear"; }
    const linmodel::SequenceModel& model() const { return model_; }

private:
    linmodel::SequenceModel model_;
};

struct Prediction {
    std::string sequence_id;
    ClassProbs probs;
};

io::Json to_json(const Prediction& p);
Prediction prediction_from_json(const io::Json& j);
std::string predictions_jsonl(const std::vector<Prediction>& preds);
/// Throws DataError on duplicates or probabilities that do not form a distribution.
std::vector<Prediction> load_predictions(const std::filesystem::path& path);

/// Looks predictions up by sequence_id.
class FileScorer : public SequenceScorer {
public:
    explicit FileScorer(const std::vector<Prediction>& preds);
    std::vector<ClassProbs> score(std::span<const extract::Sequence> batch) override;
    std::string kind() const override { return "file"; }

private:
    std::map<std::string, ClassProbs> table_;
};

struct RemoteConfig {
    std::string url;  // http://host:port[/prefix]; requests go to <prefix>/score
    int timeout_ms = 10000;
    int retries = 2;  // extra attempts after a transport failure or 5xx
    std::size_t batch_size = 64;
    std::size_t max_in_flight = 4;
    std::string bearer_token;
};

/// Speaks POST /score {sequences:[{sequence_id,text}]} ->
/// {predictions:[{sequence_id,p_neither,p_negative,p_positive}]}. Any
/// non-200 reply, malformed body, or id mismatch raises ScorerError.
class RemoteScorer : public SequenceScorer {
public:
    explicit RemoteScorer(RemoteConfig cfg);
    std::vector<ClassProbs> score(std::span<const extract::Sequence> batch) override;
    std::string kind() const override { return "remote"; }

private:
    std::vector<ClassProbs> call(std::span<const extract::Sequence> batch) const;

    RemoteConfig cfg_;
    std::string scheme_host_port_;
    std::string path_;
};

enum class ScorerKind { linear, file, remote };
ScorerKind parse_scorer_kind(const std::string& s);

struct ScorerConfig {
    ScorerKind kind = ScorerKind::linear;
    std::filesystem::path model_path;        // linear
    std::filesystem::path predictions_path;  // file
    RemoteConfig remote;                     // remote
};

std::unique_ptr<SequenceScorer> make_scorer(const ScorerConfig& cfg);

}  // namespace cogscreen::attention
