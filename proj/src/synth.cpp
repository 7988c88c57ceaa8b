#include "cogscreen/synth.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <optional>

#include "cogscreen/error.hpp"
#include "cogscreen/extract.hpp"
#include "cogscreen/util/rng.hpp"

namespace cogscreen::synth {

using io::Json;

namespace {

struct Template {
    const char* id;
    Label label;
    const char* text;     // {a|b|c} alternatives, {#lo-hi} integers
    const char* pattern;  // always pattern that labels this sentence
};

// Every planted sentence carries at least one keyword, except the
// anticoagulation line, which only ever sits next to another neither sentence.
const Template kTemplates[] = {
    {"pos-moca", Label::positive, "Patient MOCA is {#18-25}/30.",
     R"((?i)\bMOCA\s*(score\s*)?(is\s*)?[0-9]{1,2}\s*/\s*30)"},
    {"pos-pmh", Label::positive,
     "Patient with past medical history of {dementia|vascular dementia|mixed dementia}.",
     R"((?i)\bpast\s*medical\s*history\s*[^\.]*(dementia))"},
    {"pos-loss", Label::positive,
     "{Family reports|Daughter reports|Wife reports} progressive memory loss over the past "
     "{year|two years|several months}.",
     R"((?i)progressive\s+memory\s+loss)"},
    {"pos-mci", Label::positive,
     "Diagnosed with mild cognitive impairment {last spring|this year|in {#2016-2020}}.",
     R"((?i)diagnosed\s+with\s+mild\s+cognitive\s+impairment)"},
    {"pos-ad", Label::positive,
     "Neurocognitive testing consistent with early Alzheimer's disease.",
     R"((?i)consistent\s+with\s+early\s+alzheimer)"},
    {"pos-mmse", Label::positive, "MMSE {#14-23} of 30, declining since the prior visit.",
     R"((?i)\bMMSE\s*[0-9]{1,2}\s*of\s*30,\s*declining)"},
    {"pos-donepezil", Label::positive,
     "Started donepezil for dementia{| with behavioral symptoms}.",
     R"((?i)donepezil\s+for\s+dementia)"},
    {"pos-lewy", Label::positive,
     "Findings suggest Lewy body disease with fluctuating attention.",
     R"((?i)suggest\s+lewy\s+body\s+disease)"},

    {"neg-intact", Label::negative, "Patient memory is intact.", R"((?i)Memory.*intact)"},
    {"neg-concerns", Label::negative, "No memory concerns{| reported| voiced by family}.",
     R"((?i)No\s*memory\s*concerns)"},
    {"neg-normal", Label::negative, "Cognition grossly normal on {exam|examination|screening}.",
     R"((?i)cognition\s+grossly\s+normal)"},
    {"neg-denies", Label::negative, "{Denies|Patient denies} memory problems.",
     R"((?i)denies\s+memory\s+problems)"},
    {"neg-screen", Label::negative, "Screening negative for dementia.",
     R"((?i)screening\s+negative\s+for\s+dementia)"},
    {"neg-mmse", Label::negative, "MMSE 30/30, no deficits noted.",
     R"((?i)\bMMSE\s*30\s*/\s*30,\s*no\s+deficits)"},

    {"nei-father", Label::neither,
     "History: {Father|Father, deceased,} has Alzheimer's Disease.",
     R"((?i)Father.*Alzheimer's\s*disease)"},
    {"nei-anticoag", Label::neither, "Patient attends anticoagulation therapy daily.",
     R"((?i)anticoagulation)"},
    {"nei-caregiver", Label::neither, "Patient is caregiver for wife who has dementia.",
     R"((?i)caregiver\s+for\s+wife\s+who\s+has\s+dementia)"},
    {"nei-angio", Label::neither, "Cerebral angiogram scheduled to evaluate aneurysm.",
     R"((?i)cerebral\s+angiogram)"},
    {"nei-stroke", Label::neither, "Cerebellar stroke in {#2005-2015} with residual ataxia.",
     R"((?i)cerebellar\s+stroke)"},
    {"nei-risk", Label::neither,
     "Cerebrovascular risk factors reviewed, including {hypertension|hyperlipidemia}.",
     R"((?i)cerebrovascular\s+risk\s+factors)"},
    {"nei-mother", Label::neither, "Mother with Lewy body dementia, deceased at {#70-92}.",
     R"((?i)mother\s+with\s+lewy\s+body)"},
};

const char* const kFiller[] = {
    "Blood pressure stable at {#118-142}/{#70-88}.",
    "Continue lisinopril {#5-20} mg daily.",
    "Follow up in {two|three|six} months.",
    "Lungs clear to auscultation bilaterally.",
    "Heart rate regular without murmurs.",
    "Abdomen soft and nontender.",
    "Patient reports good appetite and stable weight.",
    "Sleep has been adequate most nights.",
    "Denies chest pain or shortness of breath.",
    "Hemoglobin A1c was {#5-8}.{#0-9} percent last month.",
    "Influenza vaccine given today.",
    "Reviewed medication list with the patient.",
    "Knee pain improved with physical therapy.",
    "Walks {#1-3} miles most days.",
    "No recent falls reported.",
    "Vision checked by optometry this year.",
    "Renal function within normal limits.",
    "Lipid panel ordered for next visit.",
    "Patient lives with spouse in a single family home.",
    "Mild seasonal allergies treated with loratadine.",
    "Skin exam without suspicious lesions.",
    "Colonoscopy up to date.",
    "Discussed diet and regular exercise.",
    "Thyroid studies were unremarkable.",
    "Back pain managed with stretching.",
    "Weight is {#140-210} pounds.",
    "Temperature {#97-99}.{#0-9} degrees.",
    "Patient drives independently.",
    "No tobacco use; occasional alcohol.",
    "Bowel habits regular.",
    "Edema absent in both legs.",
    "Hearing adequate for conversation.",
    "Continue atorvastatin {#10-40} mg nightly.",
    "Reports mild fatigue in the afternoons.",
    "Gait steady without assistive device.",
    "Refills sent to the pharmacy.",
    "Urinalysis negative.",
    "Oxygen saturation {#94-99} percent on room air.",
    "Plan reviewed and patient agrees.",
    "Dental visit scheduled next week.",
};

const char* const kSeparators[] = {" ", " ", " ", "  ", "\n", "\n\n", " \t", "\r\n"};

class Expander {
public:
    explicit Expander(Rng& rng) : rng_(rng) {}

    std::string expand(std::string_view t) {
        std::string out;
        std::size_t i = 0;
        while (i < t.size()) {
            if (t[i] != '{') {
                out += t[i++];
                continue;
            }
            const std::size_t close = find_close(t, i);
            const std::string_view body = t.substr(i + 1, close - i - 1);
            i = close + 1;
            if (!body.empty() && body[0] == '#') {
                const auto dash = body.find('-');
                const int lo = std::stoi(std::string(body.substr(1, dash - 1)));
                const int hi = std::stoi(std::string(body.substr(dash + 1)));
                out += std::to_string(rng_.between(lo, hi));
            } else {
                const auto alts = split_alternatives(body);
                out += expand(alts[rng_.below(alts.size())]);
            }
        }
        return out;
    }

private:
    static std::size_t find_close(std::string_view t, std::size_t open) {
        int depth = 0;
        for (std::size_t j = open; j < t.size(); ++j) {
            if (t[j] == '{') ++depth;
            if (t[j] == '}' && --depth == 0) return j;
        }
        throw Error("synthetic template has an unbalanced brace");
    }

    static std::vector<std::string_view> split_alternatives(std::string_view body) {
        std::vector<std::string_view> alts;
        int depth = 0;
        std::size_t start = 0;
        for (std::size_t j = 0; j < body.size(); ++j) {
            if (body[j] == '{') ++depth;
            if (body[j] == '}') --depth;
            if (body[j] == '|' && depth == 0) {
                alts.push_back(body.substr(start, j - start));
                start = j + 1;
            }
        }
        alts.push_back(body.substr(start));
        return alts;
    }

    Rng& rng_;
};

std::string patient_id(std::size_t i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "P%04zu", i + 1);
    return buf;
}

std::vector<const Template*> templates_for(Label label) {
    std::vector<const Template*> out;
    for (const auto& t : kTemplates) {
        if (t.label == label) out.push_back(&t);
    }
    return out;
}

class Generator {
public:
    explicit Generator(const GenOptions& opts) : opts_(opts), rng_(opts.seed), expander_(rng_) {
        keywords_ = extract::default_keywords();
        for (std::size_t i = 0; i < std::size(kTemplates); ++i) {
            const auto& t = kTemplates[i];
            patterns::AlwaysPattern p;
            char id[16];
            std::snprintf(id, sizeof id, "syn-%02zu", i + 1);
            p.pattern_id = id;
            p.regex_source = t.pattern;
            p.label = t.label;
            p.author = "gen-synthetic";
            p.created_at = "2021-07-13T00:00:00Z";
            patterns_.push_back(p);
            compiled_.push_back(patterns::compile_pattern(p));
        }
    }

    SyntheticCorpus run() {
        if (opts_.patients == 0) throw UsageError("synthetic corpus size must be positive");
        std::vector<corpus::PatientRecord> patients;
        std::vector<corpus::ClinicalNote> notes;
        SyntheticCorpus out;
        const Date ref{2021, 7, 13};

        for (std::size_t i = 0; i < opts_.patients; ++i) {
            corpus::PatientRecord p;
            p.patient_id = patient_id(i);
            const bool too_young = rng_.chance(opts_.too_young_fraction);
            const int age = too_young ? rng_.between(40, 58) : rng_.between(62, 90);
            p.birth_date = Date{ref.year - age - 1, rng_.between(1, 12), rng_.between(1, 28)};
            p.gender = rng_.chance(0.5) ? corpus::Gender::female : corpus::Gender::male;
            p.race = rng_.pick(std::vector<std::string>{"white", "black", "asian", "other"});
            if (!rng_.chance(0.03)) {
                p.apoe_genotype = static_cast<corpus::ApoeGenotype>(rng_.below(3));
            }
            const bool has_ci = rng_.chance(opts_.ci_fraction);
            out.patient_labels.push_back({p.patient_id, has_ci, "synthetic"});

            const bool sparse = rng_.chance(opts_.sparse_patient_fraction);
            const int n_notes = sparse ? rng_.between(4, 9) : rng_.between(12, 18);
            const double main_share = has_ci ? 0.6 + 0.2 * rng_.uniform() : 0.5 + 0.3 * rng_.uniform();
            const Label main_label = has_ci ? Label::positive : Label::negative;
            const auto n_main = static_cast<int>(std::lround(main_share * n_notes));
            std::vector<Label> themes;
            for (int k = 0; k < n_notes; ++k) themes.push_back(k < n_main ? main_label : Label::neither);
            rng_.shuffle(std::span<Label>(themes));

            for (int k = 0; k < n_notes; ++k) {
                corpus::ClinicalNote note;
                char nid[32];
                std::snprintf(nid, sizeof nid, "%s-N%02d", p.patient_id.c_str(), k + 1);
                note.note_id = nid;
                note.patient_id = p.patient_id;
                note.date = Date{rng_.between(2015, 2020), rng_.between(1, 12), rng_.between(1, 28)};
                PlantedNote planted;
                planted.note_id = note.note_id;
                planted.patient_id = p.patient_id;
                planted.label = themes[k];
                planted.in_cohort = !too_young;
                note.text = write_note(planted);
                if (planted.in_cohort) out.expected_sequences += planted.clusters;
                notes.push_back(std::move(note));
                out.planted.push_back(std::move(planted));
            }
            if (!too_young) ++out.cohort_patients;
            patients.push_back(std::move(p));
        }
        out.corpus = corpus::Corpus(std::move(patients), std::move(notes));
        out.keywords = keywords_;
        out.patterns = patterns_;
        return out;
    }

private:
    std::string filler_sentence() {
        std::string s = expander_.expand(rng_.pick(kFiller));
        audit_sentence(s, std::nullopt);
        return s;
    }

    // Throws unless only patterns of `label` (or none, for filler) match and,
    // for filler, no keyword occurs.
    void audit_sentence(const std::string& s, std::optional<Label> label) {
        if (!label && !extract::find_keyword_matches(s, keywords_).empty()) {
            throw Error("synthetic filler contains a keyword: " + s);
        }
        for (const auto& cp : compiled_) {
            if (cp.regex.search(s) && (!label || cp.pattern.label != *label)) {
                throw Error("synthetic sentence matched pattern " + cp.pattern.pattern_id +
                            " outside its class: " + s);
            }
        }
    }

    std::vector<std::string> cluster(Label label, PlantedNote& planted) {
        auto pool = templates_for(label);
        const std::size_t n = static_cast<std::size_t>(rng_.between(1, 3));
        if (n == 1) {
            // The anticoagulation line has no keyword, so it never stands alone.
            std::erase_if(pool, [](const Template* t) { return std::string_view(t->id) == "nei-anticoag"; });
        }
        rng_.shuffle(std::span<const Template*>(pool));
        std::vector<std::string> out;
        for (std::size_t i = 0; i < n && i < pool.size(); ++i) {
            std::string s = expander_.expand(pool[i]->text);
            audit_sentence(s, label);
            planted.templates.push_back(pool[i]->id);
            out.push_back(std::move(s));
        }
        return out;
    }

    std::vector<std::string> fillers(std::size_t n) {
        std::vector<std::string> out;
        for (std::size_t i = 0; i < n; ++i) out.push_back(filler_sentence());
        return out;
    }

    std::string write_note(PlantedNote& planted) {
        std::vector<std::string> sentences;
        const auto append = [&](std::vector<std::string> v) {
            for (auto& s : v) sentences.push_back(std::move(s));
        };
        const bool long_note = rng_.chance(opts_.long_note_fraction);
        if (long_note) {
            // Two clusters with 820 to 880 filler tokens between them.
            append(fillers(static_cast<std::size_t>(rng_.between(2, 8))));
            append(cluster(planted.label, planted));
            std::size_t gap = static_cast<std::size_t>(rng_.between(0, 60));
            gap += 820;
            while (gap > 0) {
                std::string f = filler_sentence();
                gap -= std::min(gap, extract::tokenize(f).size());
                sentences.push_back(std::move(f));
            }
            append(cluster(planted.label, planted));
            append(fillers(static_cast<std::size_t>(rng_.between(2, 8))));
            planted.clusters = 2;
        } else {
            append(fillers(static_cast<std::size_t>(rng_.between(2, 10))));
            append(cluster(planted.label, planted));
            append(fillers(static_cast<std::size_t>(rng_.between(2, 10))));
            planted.clusters = 1;
        }

        std::string raw, normalized;
        for (std::size_t i = 0; i < sentences.size(); ++i) {
            if (i > 0) {
                raw += rng_.pick(kSeparators);
                normalized += ' ';
            }
            raw += sentences[i];
            normalized += sentences[i];
        }
        if (rng_.chance(0.2)) raw = "\n" + raw + "\n";
        if (extract::normalize_text(raw) != normalized) {
            throw Error("synthetic note " + planted.note_id + " does not normalize as planned");
        }
        // Patterns with .* can span sentences; check the whole note too.
        for (const auto& cp : compiled_) {
            if (cp.pattern.label != planted.label && cp.regex.search(normalized)) {
                throw Error("synthetic note " + planted.note_id + " matched pattern " +
                            cp.pattern.pattern_id + " outside its class");
            }
        }
        return raw;
    }

    GenOptions opts_;
    Rng rng_;
    Expander expander_;
    extract::KeywordSet keywords_;
    std::vector<patterns::AlwaysPattern> patterns_;
    std::vector<patterns::CompiledPattern> compiled_;
};

}  // namespace

SyntheticCorpus generate(const GenOptions& opts) { return Generator(opts).run(); }

Json to_json(const PlantedNote& p) {
    return Json{{"note_id", p.note_id},
                {"patient_id", p.patient_id},
                {"label", to_string(p.label)},
                {"clusters", p.clusters},
                {"templates", p.templates},
                {"in_cohort", p.in_cohort}};
}

Json manifest(const SyntheticCorpus& c, const GenOptions& opts) {
    std::size_t ci = 0;
    for (const auto& l : c.patient_labels) ci += l.has_ci ? 1 : 0;
    return Json{{"schema_version", io::kSchemaVersion},
                {"kind", "synthetic_corpus"},
                {"seed", opts.seed},
                {"size", opts.patients},
                {"patients", c.corpus.patients().size()},
                {"notes", c.corpus.notes().size()},
                {"ci_patients", ci},
                {"cohort_patients", c.cohort_patients},
                {"expected_sequences", c.expected_sequences},
                {"patterns", c.patterns.size()}};
}

void write_corpus(const SyntheticCorpus& c, const GenOptions& opts,
                  const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::string planted;
    for (const auto& p : c.planted) planted += io::dump_line(to_json(p)) + "\n";
    io::OutputSet out;
    out.stage(dir / "patients.jsonl", corpus::patients_jsonl(c.corpus));
    out.stage(dir / "notes.jsonl", corpus::notes_jsonl(c.corpus));
    out.stage(dir / "keywords.json", io::dump_pretty(extract::to_json(c.keywords)));
    out.stage(dir / "patterns.jsonl", patterns::patterns_jsonl(c.patterns));
    out.stage(dir / "patient_labels.jsonl", patient::patient_labels_jsonl(c.patient_labels));
    out.stage(dir / "planted.jsonl", std::move(planted));
    out.stage(dir / "manifest.json", io::dump_pretty(manifest(c, opts)));
    out.commit();
}

}  // namespace cogscreen::synth
