#pragma once

#include <atomic>
#include <filesystem>
#include <memory>
#include <string>
#include <thread>

#include "cogscreen/attention/scorer.hpp"
#include "cogscreen/extract.hpp"
#include "cogscreen/service/store.hpp"
#include "cogscreen/types.hpp"

namespace httplib {
class Server;
}

namespace cogscreen::service {

struct ServiceConfig {
    std::filesystem::path store_dir = "store";
    std::filesystem::path sequences_path;  // default <store_dir>/sequences.jsonl
    attention::ScorerConfig scorer;
    std::filesystem::path patient_model_path;
    std::filesystem::path keywords_path;  // default: built-in keyword set
    extract::ExtractConfig extract;
    std::string bearer_token;  // empty: no auth
    std::string cors_origin = "*";
    std::size_t compact_every = 64;
};

/// HTTP screening and annotation service.
class Service {
public:
    explicit Service(ServiceConfig cfg);
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// Binds (port 0 picks a free port) and serves on a background thread;
    /// returns the bound port.
    int start(const std::string& host, int port);
    /// Blocks until stop() is called.
    void wait();
    void stop();

    AnnotationStore& store() { return *store_; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::unique_ptr<AnnotationStore> store_;
};

/// Stand-in for an external transformer scorer: answers POST /score with
/// fixed probabilities, or with `fail_status` when non-zero.
struct MockScorerConfig {
    ClassProbs probs{0.1, 0.2, 0.7};
    int fail_status = 0;
};

class MockScorer {
public:
    explicit MockScorer(MockScorerConfig cfg);
    ~MockScorer();
    MockScorer(const MockScorer&) = delete;
    MockScorer& operator=(const MockScorer&) = delete;

    int start(const std::string& host, int port);
    void wait();
    void stop();
    std::size_t calls() const { return calls_; }

private:
    MockScorerConfig cfg_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    std::atomic<std::size_t> calls_{0};
};

}  // namespace cogscreen::service
