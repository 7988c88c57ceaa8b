#pragma once

#include <span>
#include <vector>

#include "cogscreen/dataset.hpp"
#include "cogscreen/extract.hpp"
#include "cogscreen/patterns.hpp"
#include "cogscreen/synth.hpp"
#include "cogscreen/util/hash.hpp"

namespace fixture {

struct Pipeline {
    cogscreen::synth::SyntheticCorpus corpus;
    std::vector<cogscreen::extract::Sequence> sequences;
    std::vector<cogscreen::patterns::LabelRecord> labels;
    cogscreen::dataset::LabeledDataset dataset;
};

// Generate -> cohort -> extract -> pattern-label. Roughly one sequence in
// `manual_every` is relabeled as a manual annotation with the same class so
// every (label, source) stratum is populated.
inline Pipeline labeled_synthetic(std::size_t patients, std::uint64_t seed, std::size_t manual_every = 4) {
    using namespace cogscreen;
    Pipeline p;
    synth::GenOptions opts;
    opts.patients = patients;
    opts.seed = seed;
    p.corpus = synth::generate(opts);
    const std::vector<extract::KeywordSet> sets{p.corpus.keywords};
    corpus::CohortCriteria crit;
    crit.keyword_set_id = p.corpus.keywords.id;
    const auto kept = corpus::filter_cohort(p.corpus.corpus, crit, sets);
    for (const auto& pid : kept) {
        for (const auto* n : p.corpus.corpus.notes_for(pid)) {
            auto s = extract::construct_sequences(*n, p.corpus.keywords, {});
            p.sequences.insert(p.sequences.end(), s.begin(), s.end());
        }
    }
    auto applied = patterns::apply_patterns(p.corpus.patterns, p.sequences, {});
    p.labels = patterns::merge_labels({}, applied);
    if (manual_every > 0) {
        for (auto& r : p.labels) {
            if (fnv1a64(r.sequence_id) % manual_every == 0) {
                r.source = patterns::LabelSource::manual;
                r.pattern_id.reset();
                r.annotator = "fixture";
            }
        }
    }
    p.dataset = dataset::LabeledDataset::assemble(p.sequences, p.labels);
    return p;
}

}  // namespace fixture
