#include "cogscreen/service/server.hpp"

#include <chrono>
#include <mutex>

#include "httplib.h"

#include "cogscreen/error.hpp"
#include "cogscreen/patient.hpp"
#include "cogscreen/service/screening.hpp"
#include "cogscreen/util/json_io.hpp"

namespace cogscreen::service {

namespace fs = std::filesystem;
using io::Json;

namespace {

void send_json(httplib::Response& res, int status, const Json& body) {
    res.status = status;
    res.set_content(io::dump_line(body), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message,
                std::optional<std::size_t> offset = std::nullopt) {
    Json err{{"message", message}, {"status", status}};
    if (offset) err["offset"] = *offset;
    send_json(res, status, Json{{"schema_version", io::kSchemaVersion}, {"error", err}});
}

Json parse_body(const httplib::Request& req) {
    try {
        Json j = Json::parse(req.body);
        if (!j.is_object()) throw DataError("request body must be a JSON object");
        return j;
    } catch (const Json::exception&) {
        throw DataError("request body is not valid JSON");
    }
}

Label require_label(const Json& j) {
    if (!j.contains("label")) throw DataError("missing field 'label'");
    const Json& v = j["label"];
    std::optional<Label> l;
    if (v.is_string()) l = parse_label(v.get<std::string>());
    if (v.is_number_integer() && v.get<int>() >= 0 && v.get<int>() <= 2) l = label_from_int(v.get<int>());
    if (!l) throw DataError("invalid label");
    return *l;
}

Json view_json(const SequenceView& v) {
    Json j{{"sequence", extract::to_json(v.sequence)}, {"status", std::string(to_string(v.status))}};
    j["label"] = v.label ? patterns::to_json(*v.label) : Json();
    return j;
}

Json counts_json(const StatusCounts& c) {
    return Json{{"unlabeled", c.unlabeled},
                {"manual", c.manual},
                {"pattern", c.pattern},
                {"conflict", c.conflict}};
}

bool valid_report_id(const std::string& id) {
    if (id.empty() || id.size() > 64) return false;
    return std::all_of(id.begin(), id.end(), [](char c) {
        return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
    });
}

}  // namespace

struct Service::Impl {
    ServiceConfig cfg;
    httplib::Server server;
    std::thread thread;
    std::unique_ptr<attention::SequenceScorer> scorer;
    linmodel::LogRegModel patient_model;
    extract::KeywordSet keywords;
    std::mutex report_mu;

    fs::path reports_dir() const { return cfg.store_dir / "reports"; }
};

Service::Service(ServiceConfig cfg) : impl_(std::make_unique<Impl>()) {
    impl_->cfg = std::move(cfg);
    auto& I = *impl_;
    fs::create_directories(I.reports_dir());
    I.scorer = attention::make_scorer(I.cfg.scorer);
    I.patient_model = patient::load_patient_model(I.cfg.patient_model_path);
    I.keywords = I.cfg.keywords_path.empty() ? extract::default_keywords()
                                             : extract::load_keywords(I.cfg.keywords_path);
    I.cfg.extract.validate();
    fs::path seq_path = I.cfg.sequences_path.empty() ? I.cfg.store_dir / "sequences.jsonl"
                                                     : I.cfg.sequences_path;
    std::vector<extract::Sequence> seqs;
    if (fs::exists(seq_path)) seqs = extract::load_sequences(seq_path);
    store_ = std::make_unique<AnnotationStore>(I.cfg.store_dir, std::move(seqs), I.cfg.compact_every);

    auto& srv = I.server;
    const std::string origin = I.cfg.cors_origin;
    const std::string token = I.cfg.bearer_token;

    srv.set_pre_routing_handler([origin, token](const httplib::Request& req, httplib::Response& res) {
        res.set_header("Access-Control-Allow-Origin", origin);
        res.set_header("Access-Control-Allow-Headers", "Authorization, Content-Type");
        res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
        if (req.method == "OPTIONS") {
            res.status = 204;
            return httplib::Server::HandlerResponse::Handled;
        }
        if (!token.empty() && req.get_header_value("Authorization") != "Bearer " + token) {
            send_error(res, 401, "missing or invalid bearer token");
            return httplib::Server::HandlerResponse::Handled;
        }
        return httplib::Server::HandlerResponse::Unhandled;
    });

    srv.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        try {
            std::rethrow_exception(ep);
        } catch (const RegexError& e) {
            send_error(res, 400, e.what(), e.offset());
        } catch (const NotFoundError& e) {
            send_error(res, 404, e.what());
        } catch (const DuplicateError& e) {
            send_error(res, 409, e.what());
        } catch (const ScorerError& e) {
            send_error(res, 502, e.what());
        } catch (const DataError& e) {
            send_error(res, 400, e.what());
        } catch (const UsageError& e) {
            send_error(res, 400, e.what());
        } catch (const std::exception& e) {
            send_error(res, 500, std::string("internal error: ") + e.what());
        } catch (...) {
            send_error(res, 500, "internal error");
        }
    });

    srv.Post("/screen", [this](const httplib::Request& req, httplib::Response& res) {
        auto& I = *impl_;
        const auto start = std::chrono::steady_clock::now();
        std::string body = req.body;
        if (req.is_multipart_form_data()) {
            if (!req.has_file("notes")) throw DataError("multipart upload needs a 'notes' part");
            body = req.get_file_value("notes").content;
        }
        const auto notes = parse_upload(body);
        ScreeningModels models;
        models.keywords = I.keywords;
        models.extract = I.cfg.extract;
        models.scorer = I.scorer.get();
        models.patient_model = &I.patient_model;
        auto report = screen_notes(notes, models);  // scorer failure throws before anything is stored
        report.timing_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                               std::chrono::steady_clock::now() - start)
                               .count();
        const std::string text = report_text(report);
        {
            std::lock_guard lock(I.report_mu);
            io::write_file_atomic(I.reports_dir() / (report.report_id + ".json"), text);
        }
        res.status = 200;
        res.set_content(text, "application/json");
    });

    srv.Get(R"(/reports/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        const std::string id = req.matches[1];
        const fs::path p = impl_->reports_dir() / (id + ".json");
        if (!valid_report_id(id) || !fs::exists(p)) throw NotFoundError("unknown report " + id);
        res.status = 200;
        res.set_content(io::read_file(p), "application/json");
    });

    srv.Get("/annotation/sequences", [this](const httplib::Request& req, httplib::Response& res) {
        std::optional<SequenceStatus> status;
        if (req.has_param("status") && !req.get_param_value("status").empty()) {
            status = parse_status(req.get_param_value("status"));
            if (!status) throw DataError("unknown status '" + req.get_param_value("status") + "'");
        }
        std::size_t page = 0, page_size = 50;
        try {
            if (req.has_param("page")) page = std::stoul(req.get_param_value("page"));
            if (req.has_param("page_size")) page_size = std::stoul(req.get_param_value("page_size"));
        } catch (const std::logic_error&) {
            throw DataError("page and page_size must be non-negative integers");
        }
        if (page_size == 0 || page_size > 1000) throw DataError("page_size must be in 1..1000");
        const auto pg = store_->page(status, page, page_size);
        Json items = Json::array();
        for (const auto& v : pg.items) items.push_back(view_json(v));
        send_json(res, 200,
                  Json{{"schema_version", io::kSchemaVersion},
                       {"page", pg.page},
                       {"page_size", pg.page_size},
                       {"total", pg.total},
                       {"counts", counts_json(store_->counts())},
                       {"items", items}});
    });

    srv.Post("/annotation/labels", [this](const httplib::Request& req, httplib::Response& res) {
        const Json j = parse_body(req);
        const auto id = io::require<std::string>(j, "sequence_id");
        const Label label = require_label(j);
        const auto annotator = io::require<std::string>(j, "annotator");
        if (annotator.empty()) throw DataError("annotator must be non-empty");
        const auto r = store_->put_manual_label(id, label, annotator);
        send_json(res, 200,
                  Json{{"schema_version", io::kSchemaVersion},
                       {"record", patterns::to_json(r.record)},
                       {"changed", r.changed}});
    });

    srv.Post("/annotation/patterns", [this](const httplib::Request& req, httplib::Response& res) {
        const Json j = parse_body(req);
        const auto src = io::require<std::string>(j, "regex_source");
        const Label label = require_label(j);
        const auto author = j.value("author", std::string("anonymous"));
        const auto r = store_->add_pattern(src, label, author);
        send_json(res, 200,
                  Json{{"schema_version", io::kSchemaVersion},
                       {"pattern_id", r.pattern.pattern_id},
                       {"pattern", patterns::to_json(r.pattern)},
                       {"applied", r.applied},
                       {"conflicts", r.conflicts},
                       {"invalidated", r.invalidated}});
    });

    srv.Post("/annotation/patterns/preview", [this](const httplib::Request& req, httplib::Response& res) {
        const Json j = parse_body(req);
        patterns::AlwaysPattern p;
        p.pattern_id = "~preview";
        p.regex_source = io::require<std::string>(j, "regex_source");
        p.label = require_label(j);
        p.author = j.value("author", std::string("preview"));
        patterns::compile_pattern(p);
        const auto r = store_->preview(p, j.value("max_samples", std::size_t{10}));
        send_json(res, 200,
                  Json{{"schema_version", io::kSchemaVersion},
                       {"would_label", r.would_label},
                       {"would_conflict", r.would_conflict},
                       {"sample_sequence_ids", r.sample_sequence_ids}});
    });
}

Service::~Service() { stop(); }

int Service::start(const std::string& host, int port) {
    auto& srv = impl_->server;
    int bound = port;
    if (port == 0) {
        bound = srv.bind_to_any_port(host);
    } else if (!srv.bind_to_port(host, port)) {
        bound = -1;
    }
    if (bound < 0) throw UsageError("cannot listen on " + host + ":" + std::to_string(port));
    impl_->thread = std::thread([&srv] { srv.listen_after_bind(); });
    srv.wait_until_ready();
    return bound;
}

void Service::wait() {
    if (impl_->thread.joinable()) impl_->thread.join();
}

void Service::stop() {
    if (!impl_) return;
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

MockScorer::MockScorer(MockScorerConfig cfg)
    : cfg_(cfg), server_(std::make_unique<httplib::Server>()) {
    server_->Post("/score", [this](const httplib::Request& req, httplib::Response& res) {
        ++calls_;
        if (cfg_.fail_status != 0) {
            res.status = cfg_.fail_status;
            res.set_content("{\"error\":\"configured failure\"}", "application/json");
            return;
        }
        Json in;
        try {
            in = Json::parse(req.body);
        } catch (const Json::exception&) {
            res.status = 400;
            return;
        }
        Json preds = Json::array();
        for (const auto& s : in.value("sequences", Json::array())) {
            preds.push_back({{"sequence_id", s.value("sequence_id", "")},
                             {"p_neither", cfg_.probs.p_neither},
                             {"p_negative", cfg_.probs.p_negative},
                             {"p_positive", cfg_.probs.p_positive}});
        }
        res.set_content(io::dump_line(Json{{"schema_version", io::kSchemaVersion}, {"predictions", preds}}),
                        "application/json");
    });
}

MockScorer::~MockScorer() { stop(); }

int MockScorer::start(const std::string& host, int port) {
    int bound = port;
    if (port == 0) {
        bound = server_->bind_to_any_port(host);
    } else if (!server_->bind_to_port(host, port)) {
        bound = -1;
    }
    if (bound < 0) throw UsageError("cannot listen on " + host + ":" + std::to_string(port));
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    return bound;
}

void MockScorer::wait() {
    if (thread_.joinable()) thread_.join();
}

void MockScorer::stop() {
    server_->stop();
    if (thread_.joinable()) thread_.join();
}

}  // namespace cogscreen::service
