#include "cogscreen/cli.hpp"

#include <chrono>
#include <map>
#include <set>
#include <sstream>

#include "CLI11.hpp"

#include "cogscreen/attention/scorer.hpp"
#include "cogscreen/corpus.hpp"
#include "cogscreen/dataset.hpp"
#include "cogscreen/error.hpp"
#include "cogscreen/eval.hpp"
#include "cogscreen/extract.hpp"
#include "cogscreen/linmodel/sequence_model.hpp"
#include "cogscreen/patient.hpp"
#include "cogscreen/patterns.hpp"
#include "cogscreen/service/screening.hpp"
#include "cogscreen/service/server.hpp"
#include "cogscreen/synth.hpp"

namespace cogscreen::cli {

namespace fs = std::filesystem;
using io::Json;

namespace {

struct ScorerOpts {
    std::string kind = "linear";
    fs::path model;
    fs::path predictions;
    std::string url;
    int timeout_ms = 10000;
    int retries = 2;
    std::size_t batch_size = 64;
    std::size_t in_flight = 4;

    attention::ScorerConfig config() const {
        attention::ScorerConfig c;
        c.kind = attention::parse_scorer_kind(kind);
        c.model_path = model;
        c.predictions_path = predictions;
        c.remote.url = url;
        c.remote.timeout_ms = timeout_ms;
        c.remote.retries = retries;
        c.remote.batch_size = batch_size;
        c.remote.max_in_flight = in_flight;
        return c;
    }
};

void add_scorer_options(CLI::App* cmd, ScorerOpts& o) {
    cmd->add_option("--scorer", o.kind, "Sequence scorer: linear, file or remote")
        ->check(CLI::IsMember({"linear", "file", "remote"}))
        ->capture_default_str();
    cmd->add_option("--model", o.model, "Sequence model bundle (linear scorer)");
    cmd->add_option("--predictions", o.predictions, "predictions.jsonl (file scorer)");
    cmd->add_option("--url", o.url, "Scorer base URL (remote scorer)");
    cmd->add_option("--timeout-ms", o.timeout_ms, "Remote scorer timeout")->capture_default_str();
    cmd->add_option("--retries", o.retries, "Remote scorer retries")->capture_default_str();
    cmd->add_option("--batch-size", o.batch_size, "Remote scorer batch size")->capture_default_str();
    cmd->add_option("--in-flight", o.in_flight, "Concurrent remote calls")->capture_default_str();
}

std::pair<std::string, int> parse_listen(const std::string& s) {
    const auto colon = s.rfind(':');
    if (colon == std::string::npos) throw UsageError("--listen expects host:port");
    try {
        return {s.substr(0, colon), std::stoi(s.substr(colon + 1))};
    } catch (const std::logic_error&) {
        throw UsageError("--listen expects host:port");
    }
}

extract::KeywordSet keywords_or_default(const fs::path& p) {
    return p.empty() ? extract::default_keywords() : extract::load_keywords(p);
}

// ---- extract

struct ExtractOpts {
    fs::path corpus;
    fs::path keywords;
    fs::path out;
    int min_age = 60;
    std::string reference_date = "2021-07-13";
    bool require_genotype = false;
    std::size_t radius = 100;
    std::size_t max_tokens = 512;
};

void cmd_extract(const ExtractOpts& o, std::ostream& out) {
    const auto ks = keywords_or_default(o.keywords);
    const corpus::Corpus c = corpus::load_corpus(o.corpus);
    corpus::CohortCriteria crit;
    crit.min_age_years = o.min_age;
    crit.reference_date = Date::parse(o.reference_date);
    crit.require_genotype = o.require_genotype;
    crit.keyword_set_id = ks.id;
    const auto cohort = corpus::filter_cohort(c, crit, std::span(&ks, 1));
    const std::set<std::string> keep(cohort.begin(), cohort.end());
    extract::ExtractConfig cfg;
    cfg.context_radius_chars = o.radius;
    cfg.max_tokens = o.max_tokens;
    cfg.validate();
    std::vector<extract::Sequence> seqs;
    for (const auto& n : c.notes()) {
        if (!keep.count(n.patient_id)) continue;
        for (auto& s : extract::construct_sequences(n, ks, cfg)) seqs.push_back(std::move(s));
    }
    io::OutputSet outs;
    outs.stage(o.out / "sequences.jsonl", extract::sequences_jsonl(seqs));
    outs.commit();
    out << "patients kept: " << cohort.size() << "\n";
    out << "sequences: " << seqs.size() << "\n";
}

// ---- label

struct LabelOpts {
    fs::path sequences;
    fs::path patterns;
    fs::path labels;
    fs::path out;
};

void cmd_label(const LabelOpts& o, std::ostream& out) {
    const auto seqs = extract::load_sequences(o.sequences);
    const auto pats = patterns::load_patterns(o.patterns);
    const auto existing = o.labels.empty() ? std::vector<patterns::LabelRecord>{}
                                           : patterns::load_labels(o.labels);
    const auto result = patterns::apply_patterns(pats, seqs, existing);
    const auto merged = patterns::merge_labels(existing, result);
    Json conflicts = Json::array();
    for (const auto& c : result.conflicts) conflicts.push_back(patterns::to_json(c));
    const Json report{{"schema_version", io::kSchemaVersion},
                      {"new_labels", result.new_labels.size()},
                      {"conflicts", conflicts},
                      {"invalidated", result.invalidated}};
    io::OutputSet outs;
    outs.stage(o.out / "labels.jsonl", patterns::labels_jsonl(merged));
    outs.stage(o.out / "conflicts.json", io::dump_pretty(report));
    outs.commit();
    out << "labeled: " << result.new_labels.size() << "\n";
    out << "conflicts: " << result.conflicts.size() << "\n";
    out << "total labels: " << merged.size() << "\n";
}

// ---- train-seq

struct TrainSeqOpts {
    fs::path sequences;
    fs::path labels;
    fs::path out;
    std::uint64_t seed = 7;
    double test_fraction = 0.1;
    std::size_t folds = 10;
    std::vector<double> lambda_grid{0.1, 1.0, 10.0, 100.0};
    std::vector<double> pcc_grid{0.0, 0.01, 0.05, 0.1};
    std::string penalty = "l1";
    std::size_t max_iter = 5000;
    double tol = 1e-8;
    std::size_t threads = 0;
};

void cmd_train_seq(const TrainSeqOpts& o, std::ostream& out) {
    const auto seqs = extract::load_sequences(o.sequences);
    const auto labels = patterns::load_labels(o.labels);
    const auto ds = dataset::LabeledDataset::assemble(seqs, labels);
    if (ds.size() == 0) throw DataError("no labeled sequences to train on");
    const auto split = dataset::stratified_patient_split(ds, o.test_fraction, o.seed);
    const auto train = dataset::subset(ds, split.train);
    const auto folds = dataset::kfold_patient_folds(train.patient_ids(), o.folds, o.seed);
    linmodel::CvGrid grid{o.lambda_grid, o.pcc_grid};
    linmodel::CvOptions cv;
    cv.penalty = linmodel::parse_penalty(o.penalty);
    cv.fit.max_iter = o.max_iter;
    cv.fit.tol = o.tol;
    cv.threads = o.threads;
    const auto result = linmodel::train_sequence_model(train, folds, grid, cv);

    Json cv_json = linmodel::to_json(result.cv);
    cv_json["seed"] = o.seed;
    cv_json["train_sequences"] = train.size();
    io::OutputSet outs;
    outs.stage(o.out / "model.json", io::dump_pretty(linmodel::to_json(result.model)));
    outs.stage(o.out / "cv_report.json", io::dump_pretty(cv_json));
    outs.stage(o.out / "split.json", io::dump_pretty(dataset::to_json(split)));
    outs.commit();
    const auto& best = result.cv.best_cell();
    out << "train sequences: " << split.train.size() << ", test sequences: " << split.test.size()
        << "\n";
    out << "best lambda: " << best.lambda << ", pcc threshold: " << best.pcc_threshold
        << ", cv accuracy: " << best.mean_accuracy << "\n";
}

// ---- score-seq

struct ScoreSeqOpts {
    fs::path sequences;
    fs::path out;
    ScorerOpts scorer;
};

void cmd_score_seq(const ScoreSeqOpts& o, std::ostream& out) {
    const auto seqs = extract::load_sequences(o.sequences);
    auto scorer = attention::make_scorer(o.scorer.config());
    const auto probs = seqs.empty() ? std::vector<ClassProbs>{} : scorer->score(seqs);
    if (probs.size() != seqs.size()) throw ScorerError("scorer returned the wrong number of results");
    std::vector<attention::Prediction> preds;
    for (std::size_t i = 0; i < seqs.size(); ++i) preds.push_back({seqs[i].sequence_id, probs[i]});
    io::OutputSet outs;
    outs.stage(o.out / "predictions.jsonl", attention::predictions_jsonl(preds));
    outs.commit();
    out << "scored: " << preds.size() << " (" << scorer->kind() << ")\n";
}

// ---- train-patient

struct TrainPatientOpts {
    fs::path sequences;
    fs::path predictions;
    fs::path patient_labels;
    fs::path split;
    fs::path out;
    std::size_t min_sequences = 10;
    std::size_t folds = 10;
    std::vector<double> lambda_grid{0.0, 0.1, 1.0, 10.0};
    std::uint64_t seed = 7;
};

std::vector<patient::PatientFeatures> patient_features(
    const std::vector<extract::Sequence>& seqs, const std::vector<attention::Prediction>& preds) {
    std::map<std::string, ClassProbs> by_id;
    for (const auto& p : preds) by_id[p.sequence_id] = p.probs;
    std::map<std::string, std::vector<ClassProbs>> by_patient;
    for (const auto& s : seqs) {
        auto it = by_id.find(s.sequence_id);
        if (it == by_id.end()) throw DataError("no prediction for sequence " + s.sequence_id);
        by_patient[s.patient_id].push_back(it->second);
    }
    std::vector<patient::PatientFeatures> out;
    for (const auto& [pid, probs] : by_patient) out.push_back(patient::aggregate_features(pid, probs));
    return out;
}

void cmd_train_patient(const TrainPatientOpts& o, std::ostream& out) {
    const auto seqs = extract::load_sequences(o.sequences);
    const auto preds = attention::load_predictions(o.predictions);
    const auto labels = patient::load_patient_labels(o.patient_labels);
    const auto features = patient_features(seqs, preds);

    std::map<std::string, std::string> set_of;
    if (!o.split.empty()) {
        const auto split = dataset::load_split(o.split);
        std::map<std::string, std::string> patient_of;
        for (const auto& s : seqs) patient_of[s.sequence_id] = s.patient_id;
        const auto mark = [&](const std::vector<std::string>& ids, const char* name) {
            for (const auto& id : ids) {
                auto it = patient_of.find(id);
                if (it == patient_of.end()) throw DataError("split names unknown sequence " + id);
                set_of[it->second] = name;
            }
        };
        mark(split.train, "train");
        mark(split.test, "test");
    }
    const auto set_for = [&](const std::string& pid) -> std::string {
        if (o.split.empty()) return "train";
        auto it = set_of.find(pid);
        return it == set_of.end() ? "none" : it->second;
    };

    std::vector<patient::PatientFeatures> train_rows;
    for (const auto& f : patient::filter_min_sequences(features, o.min_sequences)) {
        if (set_for(f.patient_id) == "train") train_rows.push_back(f);
    }
    if (train_rows.empty()) throw DataError("no training patients pass the sequence filter");
    patient::PatientTrainOptions topts;
    topts.lambdas = o.lambda_grid;
    topts.folds = o.folds;
    topts.seed = o.seed;
    const auto result = patient::train_patient_model(train_rows, labels, topts);

    std::map<std::string, bool> label_of;
    for (const auto& l : labels) label_of[l.patient_id] = l.has_ci;
    std::string pred_lines;
    for (const auto& f : features) {
        Json j{{"patient_id", f.patient_id},
               {"p_ci", patient::predict_patient(result.model, f)},
               {"set", set_for(f.patient_id)},
               {"eligible", f.total_sequences > o.min_sequences},
               {"total_sequences", f.total_sequences}};
        auto it = label_of.find(f.patient_id);
        j["has_ci"] = it == label_of.end() ? Json() : Json(it->second);
        pred_lines += io::dump_line(j) + "\n";
    }
    io::OutputSet outs;
    outs.stage(o.out / "patient_model.json", io::dump_pretty(patient::to_json(result)));
    outs.stage(o.out / "patient_features.csv", patient::features_csv(features));
    outs.stage(o.out / "patient_predictions.jsonl", std::move(pred_lines));
    outs.commit();
    out << "training patients: " << train_rows.size() << "\n";
    out << "best lambda: " << result.cv[result.best].lambda
        << ", cv accuracy: " << result.cv[result.best].mean_accuracy << "\n";
}

// ---- eval

struct EvalOpts {
    std::string kind = "sequence";
    fs::path predictions;
    fs::path labels;
    fs::path split;
    std::string subset;
    std::string threshold = "0.5";
    fs::path out;
};

void cmd_eval(const EvalOpts& o, std::ostream& out) {
    std::string subset = o.subset;
    eval::MetricsReport m;
    eval::RocCurve roc;
    if (o.kind == "sequence") {
        if (o.labels.empty()) throw UsageError("sequence evaluation needs --labels");
        const auto preds = attention::load_predictions(o.predictions);
        const auto labels = patterns::load_labels(o.labels);
        std::map<std::string, Label> label_of;
        for (const auto& l : labels) label_of[l.sequence_id] = l.label;
        if (subset.empty()) subset = o.split.empty() ? "all" : "test";
        std::set<std::string> keep;
        if (subset != "all") {
            if (o.split.empty()) throw UsageError("--subset " + subset + " needs --split");
            const auto split = dataset::load_split(o.split);
            const auto& ids = subset == "test" ? split.test : split.train;
            keep.insert(ids.begin(), ids.end());
        }
        std::vector<int> y;
        std::vector<ClassProbs> probs;
        for (const auto& p : preds) {
            if (subset != "all" && !keep.count(p.sequence_id)) continue;
            auto it = label_of.find(p.sequence_id);
            if (it == label_of.end()) continue;
            y.push_back(static_cast<int>(it->second));
            probs.push_back(p.probs);
        }
        m = eval::multiclass_metrics(y, probs);
        std::vector<int> bin;
        std::vector<double> pos;
        for (std::size_t i = 0; i < y.size(); ++i) {
            bin.push_back(y[i] == static_cast<int>(Label::positive));
            pos.push_back(probs[i].p_positive);
        }
        if (m.auc) roc = eval::roc_auc(pos, bin);
    } else if (o.kind == "patient") {
        if (subset.empty()) subset = "test";
        std::vector<int> y;
        std::vector<double> scores;
        io::for_each_jsonl(o.predictions, [&](const Json& j, std::size_t) {
            if (!io::require<bool>(j, "eligible")) return;
            if (!j.contains("has_ci") || j["has_ci"].is_null()) return;
            if (subset != "all" && io::require<std::string>(j, "set") != subset) return;
            y.push_back(io::require<bool>(j, "has_ci") ? 1 : 0);
            scores.push_back(io::require<double>(j, "p_ci"));
        });
        double threshold = 0.5;
        if (o.threshold == "best") {
            threshold = eval::best_accuracy_threshold(scores, y).threshold;
        } else {
            try {
                threshold = std::stod(o.threshold);
            } catch (const std::logic_error&) {
                throw UsageError("--threshold expects a number or 'best'");
            }
        }
        m = eval::binary_metrics(y, scores, threshold);
        if (m.auc) roc = eval::roc_auc(scores, y);
    } else {
        throw UsageError("--kind must be sequence or patient");
    }
    Json j = eval::to_json(m);
    j["kind"] = o.kind;
    j["subset"] = subset;
    io::OutputSet outs;
    outs.stage(o.out / "metrics.json", io::dump_pretty(j));
    outs.stage(o.out / "roc.csv", eval::roc_csv(roc));
    outs.commit();
    out << o.kind << " " << subset << " n=" << m.n << " accuracy=" << m.accuracy;
    if (m.auc) out << " auc=" << *m.auc;
    out << " sensitivity=" << m.sensitivity << " specificity=" << m.specificity
        << " weighted_f1=" << m.weighted_f1 << "\n";
}

// ---- screen

struct ScreenOpts {
    fs::path notes;
    fs::path patient_model;
    fs::path keywords;
    fs::path out;
    bool timing = false;
    ScorerOpts scorer;
};

void cmd_screen(const ScreenOpts& o, std::ostream& out) {
    const auto start = std::chrono::steady_clock::now();
    const auto notes = service::parse_upload(io::read_file(o.notes));
    auto scorer = attention::make_scorer(o.scorer.config());
    const auto pm = patient::load_patient_model(o.patient_model);
    service::ScreeningModels models;
    models.keywords = keywords_or_default(o.keywords);
    models.scorer = scorer.get();
    models.patient_model = &pm;
    auto report = service::screen_notes(notes, models);
    if (o.timing) {
        report.timing_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                               std::chrono::steady_clock::now() - start)
                               .count();
    }
    io::OutputSet outs;
    outs.stage(o.out / "report.json", service::report_text(report));
    outs.commit();
    out << "report " << report.report_id << ": " << report.sequences.size()
        << " sequences, CI probability " << report.patient_ci_probability << "\n";
}

// ---- gen-synthetic

struct GenOpts {
    std::uint64_t seed = 7;
    std::size_t size = 100;
    fs::path out;
};

void cmd_gen(const GenOpts& o, std::ostream& out) {
    synth::GenOptions g;
    g.seed = o.seed;
    g.patients = o.size;
    const auto c = synth::generate(g);
    synth::write_corpus(c, g, o.out);
    out << "patients: " << c.corpus.patients().size() << ", notes: " << c.corpus.notes().size()
        << ", expected sequences: " << c.expected_sequences << "\n";
}

// ---- serve / mock-scorer

struct ServeOpts {
    std::string listen = "127.0.0.1:8080";
    fs::path store = "store";
    fs::path sequences;
    fs::path patient_model;
    fs::path keywords;
    std::string token;
    std::string cors_origin = "*";
    ScorerOpts scorer;
};

void cmd_serve(const ServeOpts& o, std::ostream& out) {
    service::ServiceConfig cfg;
    cfg.store_dir = o.store;
    cfg.sequences_path = o.sequences;
    cfg.scorer = o.scorer.config();
    cfg.patient_model_path = o.patient_model;
    cfg.keywords_path = o.keywords;
    cfg.bearer_token = o.token.empty() ? std::string(std::getenv("COGSCREEN_TOKEN") ? std::getenv("COGSCREEN_TOKEN") : "") : o.token;
    cfg.cors_origin = o.cors_origin;
    service::Service svc(cfg);
    const auto [host, port] = parse_listen(o.listen);
    const int bound = svc.start(host, port);
    out << "listening on " << host << ":" << bound << std::endl;
    svc.wait();
}

struct MockOpts {
    std::string listen = "127.0.0.1:8081";
    std::vector<double> probs{0.1, 0.2, 0.7};
    int fail_status = 0;
};

void cmd_mock(const MockOpts& o, std::ostream& out) {
    if (o.probs.size() != 3) throw UsageError("--probs expects three values");
    service::MockScorerConfig cfg;
    cfg.probs = {o.probs[0], o.probs[1], o.probs[2]};
    if (!cfg.probs.valid()) throw UsageError("--probs must form a distribution");
    cfg.fail_status = o.fail_status;
    service::MockScorer mock(cfg);
    const auto [host, port] = parse_listen(o.listen);
    const int bound = mock.start(host, port);
    out << "mock scorer on " << host << ":" << bound << std::endl;
    mock.wait();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Cognitive impairment screening toolkit"};
    app.set_config("--config", "", "key=value configuration file");
    app.require_subcommand(1);
    app.fallthrough();

    ExtractOpts ex;
    auto* c_ex = app.add_subcommand("extract", "Cohort filter and keyword sequence extraction");
    c_ex->add_option("--corpus", ex.corpus, "Directory with patients.jsonl and notes.jsonl")->required();
    c_ex->add_option("--keywords", ex.keywords, "Keyword set JSON (default: built-in set)");
    c_ex->add_option("--out", ex.out, "Output directory")->required();
    c_ex->add_option("--min-age", ex.min_age)->capture_default_str();
    c_ex->add_option("--reference-date", ex.reference_date)->capture_default_str();
    c_ex->add_flag("--require-genotype", ex.require_genotype);
    c_ex->add_option("--radius", ex.radius)->capture_default_str();
    c_ex->add_option("--max-tokens", ex.max_tokens)->capture_default_str();

    LabelOpts lb;
    auto* c_lb = app.add_subcommand("label", "Propagate always-pattern labels");
    c_lb->add_option("--sequences", lb.sequences)->required();
    c_lb->add_option("--patterns", lb.patterns)->required();
    c_lb->add_option("--labels", lb.labels, "Existing labels (manual labels are kept)");
    c_lb->add_option("--out", lb.out, "Output directory")->required();

    TrainSeqOpts ts;
    auto* c_ts = app.add_subcommand("train-seq", "Cross-validate and fit the TF-IDF sequence model");
    c_ts->add_option("--sequences", ts.sequences)->required();
    c_ts->add_option("--labels", ts.labels)->required();
    c_ts->add_option("--out", ts.out, "Output directory")->required();
    c_ts->add_option("--seed", ts.seed)->capture_default_str();
    c_ts->add_option("--test-fraction", ts.test_fraction)->capture_default_str();
    c_ts->add_option("--folds", ts.folds)->capture_default_str();
    c_ts->add_option("--lambda-grid", ts.lambda_grid)->delimiter(',')->capture_default_str();
    c_ts->add_option("--pcc-grid", ts.pcc_grid)->delimiter(',')->capture_default_str();
    c_ts->add_option("--penalty", ts.penalty)->check(CLI::IsMember({"l1", "l2", "none"}))->capture_default_str();
    c_ts->add_option("--max-iter", ts.max_iter)->capture_default_str();
    c_ts->add_option("--tol", ts.tol)->capture_default_str();
    c_ts->add_option("--threads", ts.threads, "CV worker threads (0: all cores)")->capture_default_str();

    ScoreSeqOpts ss;
    auto* c_ss = app.add_subcommand("score-seq", "Score sequences with a sequence scorer");
    c_ss->add_option("--sequences", ss.sequences)->required();
    c_ss->add_option("--out", ss.out, "Output directory")->required();
    add_scorer_options(c_ss, ss.scorer);

    TrainPatientOpts tp;
    auto* c_tp = app.add_subcommand("train-patient", "Aggregate predictions and fit the patient model");
    c_tp->add_option("--sequences", tp.sequences)->required();
    c_tp->add_option("--predictions", tp.predictions)->required();
    c_tp->add_option("--patient-labels", tp.patient_labels)->required();
    c_tp->add_option("--split", tp.split, "split.json; only train-side patients are fitted");
    c_tp->add_option("--out", tp.out, "Output directory")->required();
    c_tp->add_option("--min-sequences", tp.min_sequences)->capture_default_str();
    c_tp->add_option("--folds", tp.folds)->capture_default_str();
    c_tp->add_option("--lambda-grid", tp.lambda_grid)->delimiter(',')->capture_default_str();
    c_tp->add_option("--seed", tp.seed)->capture_default_str();

    EvalOpts ev;
    auto* c_ev = app.add_subcommand("eval", "Metrics and ROC for sequence or patient predictions");
    c_ev->add_option("--kind", ev.kind)->check(CLI::IsMember({"sequence", "patient"}))->capture_default_str();
    c_ev->add_option("--predictions", ev.predictions)->required();
    c_ev->add_option("--labels", ev.labels, "Sequence labels (sequence kind)");
    c_ev->add_option("--split", ev.split);
    c_ev->add_option("--subset", ev.subset)->check(CLI::IsMember({"test", "train", "all", "none"}));
    c_ev->add_option("--threshold", ev.threshold, "Patient threshold, or 'best'")->capture_default_str();
    c_ev->add_option("--out", ev.out, "Output directory")->required();

    ScreenOpts sc;
    auto* c_sc = app.add_subcommand("screen", "Screen one patient's notes and write a report");
    c_sc->add_option("--notes", sc.notes, "Notes file (JSON or JSON lines)")->required();
    c_sc->add_option("--patient-model", sc.patient_model)->required();
    c_sc->add_option("--keywords", sc.keywords);
    c_sc->add_option("--out", sc.out, "Output directory")->required();
    c_sc->add_flag("--timing", sc.timing, "Record wall time in the report");
    add_scorer_options(c_sc, sc.scorer);

    GenOpts gn;
    auto* c_gn = app.add_subcommand("gen-synthetic", "Generate a planted-signal synthetic corpus");
    c_gn->add_option("--seed", gn.seed)->capture_default_str();
    c_gn->add_option("--size", gn.size, "Number of patients")->capture_default_str();
    c_gn->add_option("--out", gn.out, "Output directory")->required();

    ServeOpts sv;
    auto* c_sv = app.add_subcommand("serve", "Run the HTTP screening and annotation service");
    c_sv->add_option("--listen", sv.listen)->capture_default_str();
    c_sv->add_option("--store", sv.store)->capture_default_str();
    c_sv->add_option("--sequences", sv.sequences, "Sequences for annotation");
    c_sv->add_option("--patient-model", sv.patient_model)->required();
    c_sv->add_option("--keywords", sv.keywords);
    c_sv->add_option("--token", sv.token, "Bearer token (or COGSCREEN_TOKEN)");
    c_sv->add_option("--cors-origin", sv.cors_origin)->capture_default_str();
    add_scorer_options(c_sv, sv.scorer);

    MockOpts mk;
    auto* c_mk = app.add_subcommand("mock-scorer", "Serve fixed probabilities on POST /score");
    c_mk->add_option("--listen", mk.listen)->capture_default_str();
    c_mk->add_option("--probs", mk.probs, "p_neither,p_negative,p_positive")->delimiter(',');
    c_mk->add_option("--fail-status", mk.fail_status, "Reply with this HTTP status instead");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (c_ex->parsed()) cmd_extract(ex, out);
        else if (c_lb->parsed()) cmd_label(lb, out);
        else if (c_ts->parsed()) cmd_train_seq(ts, out);
        else if (c_ss->parsed()) cmd_score_seq(ss, out);
        else if (c_tp->parsed()) cmd_train_patient(tp, out);
        else if (c_ev->parsed()) cmd_eval(ev, out);
        else if (c_sc->parsed()) cmd_screen(sc, out);
        else if (c_gn->parsed()) cmd_gen(gn, out);
        else if (c_sv->parsed()) cmd_serve(sv, out);
        else if (c_mk->parsed()) cmd_mock(mk, out);
        return kOk;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const DataError& e) {
        err << "error: " << e.what() << "\n";
        return kDataError;
    } catch (const RegexError& e) {
        err << "error: invalid pattern: " << e.what() << "\n";
        return kDataError;
    } catch (const ScorerError& e) {
        err << "error: scorer failed: " << e.what() << "\n";
        return kDataError;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return kInternal;
    }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args, out, err);
}

}  // namespace cogscreen::cli
