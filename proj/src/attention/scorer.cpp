#include "cogscreen/attention/scorer.hpp"

#include <cmath>
#include <set>

#include "httplib.h"

#include "cogscreen/error.hpp"
#include "cogscreen/util/parallel.hpp"

namespace cogscreen::attention {

using io::Json;

std::vector<ClassProbs> LinearScorer::score(std::span<const extract::Sequence> batch) {
    std::vector<ClassProbs> out;
    out.reserve(batch.size());
    for (const auto& s : batch) out.push_back(linmodel::predict(model_, s.text));
    return out;
}

namespace {

ClassProbs probs_from_json(const Json& j) {
    ClassProbs p{io::require<double>(j, "p_neither"), io::require<double>(j, "p_negative"),
                 io::require<double>(j, "p_positive")};
    if (!p.valid()) throw DataError("probabilities must lie in [0,1] and sum to 1");
    return p;
}

}  // namespace

Json to_json(const Prediction& p) {
    return Json{{"sequence_id", p.sequence_id},
                {"p_neither", p.probs.p_neither},
                {"p_negative", p.probs.p_negative},
                {"p_positive", p.probs.p_positive}};
}

Prediction prediction_from_json(const Json& j) {
    return Prediction{io::require<std::string>(j, "sequence_id"), probs_from_json(j)};
}

std::string predictions_jsonl(const std::vector<Prediction>& preds) {
    std::string out;
    for (const auto& p : preds) out += io::dump_line(to_json(p)) + "\n";
    return out;
}

std::vector<Prediction> load_predictions(const std::filesystem::path& path) {
    std::vector<Prediction> preds;
    std::set<std::string> seen;
    io::for_each_jsonl(path, [&](const Json& j, std::size_t) {
        Prediction p = prediction_from_json(j);
        if (!seen.insert(p.sequence_id).second) {
            throw DataError("duplicate prediction for sequence " + p.sequence_id);
        }
        preds.push_back(std::move(p));
    });
    return preds;
}

FileScorer::FileScorer(const std::vector<Prediction>& preds) {
    for (const auto& p : preds) table_[p.sequence_id] = p.probs;
}

std::vector<ClassProbs> FileScorer::score(std::span<const extract::Sequence> batch) {
    std::vector<ClassProbs> out;
    out.reserve(batch.size());
    for (const auto& s : batch) {
        auto it = table_.find(s.sequence_id);
        if (it == table_.end()) throw NotFoundError("no prediction for sequence " + s.sequence_id);
        out.push_back(it->second);
    }
    return out;
}

RemoteScorer::RemoteScorer(RemoteConfig cfg) : cfg_(std::move(cfg)) {
    const std::string& url = cfg_.url;
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos || url.substr(0, scheme_end) != "http") {
        throw UsageError("remote scorer url must start with http://: '" + url + "'");
    }
    const auto path_start = url.find('/', scheme_end + 3);
    scheme_host_port_ = url.substr(0, path_start);
    path_ = path_start == std::string::npos ? "" : url.substr(path_start);
    while (!path_.empty() && path_.back() == '/') path_.pop_back();
    path_ += "/score";
    if (cfg_.batch_size == 0) throw UsageError("remote scorer batch size must be positive");
    if (cfg_.max_in_flight == 0) cfg_.max_in_flight = 1;
    if (cfg_.retries < 0) cfg_.retries = 0;
}

std::vector<ClassProbs> RemoteScorer::call(std::span<const extract::Sequence> batch) const {
    Json req{{"schema_version", io::kSchemaVersion}, {"sequences", Json::array()}};
    for (const auto& s : batch) {
        req["sequences"].push_back({{"sequence_id", s.sequence_id}, {"text", s.text}});
    }
    const std::string body = io::dump_line(req);

    httplib::Client client(scheme_host_port_);
    const auto secs = cfg_.timeout_ms / 1000;
    const auto usecs = (cfg_.timeout_ms % 1000) * 1000;
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
    if (!cfg_.bearer_token.empty()) client.set_bearer_token_auth(cfg_.bearer_token);

    std::string last_error;
    for (int attempt = 0; attempt <= cfg_.retries; ++attempt) {
        auto res = client.Post(path_, body, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200) throw ScorerError("scorer replied HTTP " + std::to_string(res->status));
        Json reply;
        try {
            reply = Json::parse(res->body);
        } catch (const Json::exception&) {
            throw ScorerError("scorer reply is not JSON");
        }
        if (!reply.is_object() || !reply.contains("predictions") || !reply["predictions"].is_array() ||
            reply["predictions"].size() != batch.size()) {
            throw ScorerError("scorer reply has no matching predictions array");
        }
        std::map<std::string, ClassProbs> by_id;
        try {
            for (const auto& p : reply["predictions"]) {
                Prediction pred = prediction_from_json(p);
                by_id[pred.sequence_id] = pred.probs;
            }
        } catch (const DataError& e) {
            throw ScorerError(std::string("malformed scorer prediction: ") + e.what());
        }
        std::vector<ClassProbs> out;
        out.reserve(batch.size());
        for (const auto& s : batch) {
            auto it = by_id.find(s.sequence_id);
            if (it == by_id.end()) throw ScorerError("scorer omitted sequence " + s.sequence_id);
            out.push_back(it->second);
        }
        return out;
    }
    throw ScorerError("remote scorer at " + cfg_.url + " failed after " +
                      std::to_string(cfg_.retries + 1) + " attempts: " + last_error);
}

std::vector<ClassProbs> RemoteScorer::score(std::span<const extract::Sequence> batch) {
    const std::size_t n_batches = (batch.size() + cfg_.batch_size - 1) / cfg_.batch_size;
    std::vector<std::vector<ClassProbs>> parts(n_batches);
    util::parallel_for(n_batches, cfg_.max_in_flight, [&](std::size_t b) {
        const std::size_t lo = b * cfg_.batch_size;
        const std::size_t hi = std::min(batch.size(), lo + cfg_.batch_size);
        parts[b] = call(batch.subspan(lo, hi - lo));
    });
    std::vector<ClassProbs> out;
    out.reserve(batch.size());
    for (auto& p : parts) out.insert(out.end(), p.begin(), p.end());
    return out;
}

ScorerKind parse_scorer_kind(const std::string& s) {
    if (s == "linear") return ScorerKind::linear;
    if (s == "file") return ScorerKind::file;
    if (s == "remote") return ScorerKind::remote;
    throw UsageError("unknown scorer '" + s + "' (expected linear, file or remote)");
}

std::unique_ptr<SequenceScorer> make_scorer(const ScorerConfig& cfg) {
    switch (cfg.kind) {
        case ScorerKind::linear:
            if (cfg.model_path.empty()) throw UsageError("linear scorer needs a model path");
            return std::make_unique<LinearScorer>(linmodel::load_sequence_model(cfg.model_path));
        case ScorerKind::file:
            if (cfg.predictions_path.empty()) throw UsageError("file scorer needs a predictions path");
            return std::make_unique<FileScorer>(load_predictions(cfg.predictions_path));
        case ScorerKind::remote:
            if (cfg.remote.url.empty()) throw UsageError("remote scorer needs a url");
            return std::make_unique<RemoteScorer>(cfg.remote);
    }
    throw UsageError("unknown scorer kind");
}

}  // namespace cogscreen::attention
