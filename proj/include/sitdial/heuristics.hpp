#pragma once

// Non-neural baselines: random-ID coreference below a cutoff, previous /
// all-previous system mentions, and the random / majority disambiguation
// predictors. Used both as reportable systems and as oracles for the
// evaluation harness.

#include <set>
#include <string>
#include <vector>

#include "common.hpp"
#include "corpus.hpp"
#include "featurizer.hpp"
#include "metrics.hpp"

namespace sitdial {

struct BaselineKind {
    enum Kind {
        random_below_k,
        previous_objects,
        all_previous_objects,
        random_disambiguation,
        majority_disambiguation,
    } kind = previous_objects;
    int k = 141;  // for random_below_k

    static BaselineKind parse(const std::string& name, int k = 141) {
        BaselineKind b;
        b.k = k;
        if (name == "random_below_k")
            b.kind = random_below_k;
        else if (name == "previous_objects")
            b.kind = previous_objects;
        else if (name == "all_previous_objects")
            b.kind = all_previous_objects;
        else if (name == "random_disambiguation")
            b.kind = random_disambiguation;
        else if (name == "majority_disambiguation")
            b.kind = majority_disambiguation;
        else
            throw Error("unknown baseline kind: " + name);
        if (b.k < 1) throw Error("random_below_k: k must be >= 1");
        return b;
    }
};

// Coreference prediction for one turn. random_below_k emits exactly one id
// uniform on [0,k), unconditioned on the scene (an id absent from the scene
// is simply a false positive); the mention baselines are deterministic.
inline std::vector<int> predict_coref(const BaselineKind& baseline, const Dialogue& dialogue, int t,
                                      Rng& rng) {
    switch (baseline.kind) {
        case BaselineKind::random_below_k:
            return {int(rng.uniform_int(0, baseline.k - 1))};
        case BaselineKind::previous_objects:
            if (t == 0) return {};
            return dialogue.turns[std::size_t(t) - 1].system_mentioned;
        case BaselineKind::all_previous_objects:
            return object_history(dialogue, t, kAllHistory);
        default:
            throw Error("predict_coref: not a coreference baseline");
    }
}

inline bool predict_disambiguation(const BaselineKind& baseline, Rng& rng) {
    switch (baseline.kind) {
        case BaselineKind::random_disambiguation: return rng.bernoulli(0.5);
        case BaselineKind::majority_disambiguation: return false;
        default: throw Error("predict_disambiguation: not a disambiguation baseline");
    }
}

// ---------------------------------------------------------------------------
// Corpus-level runs

// Per-turn RNG streams derived from (seed, turn ordinal): parallel-safe and
// independent of evaluation order.
inline EvalReport run_coref_baseline(const BaselineKind& baseline, const Corpus& corpus,
                                     std::uint64_t seed) {
    Rng base(seed);
    std::vector<std::vector<int>> preds, golds;
    std::uint64_t ordinal = 0;
    for (const auto& d : corpus.dialogues) {
        for (const auto& t : d.turns) {
            ++ordinal;
            if (!t.coref_targets) continue;
            Rng turn_rng = base.derive(ordinal);
            preds.push_back(predict_coref(baseline, d, t.turn_index, turn_rng));
            golds.push_back(*t.coref_targets);
        }
    }
    return object_f1(preds, golds);
}

inline double run_disambiguation_baseline(const BaselineKind& baseline, const Corpus& corpus,
                                          std::uint64_t seed) {
    Rng base(seed);
    std::vector<bool> preds, golds;
    std::uint64_t ordinal = 0;
    for (const auto& d : corpus.dialogues) {
        for (const auto& t : d.turns) {
            ++ordinal;
            if (!t.disambiguation_label) continue;
            Rng turn_rng = base.derive(ordinal);
            preds.push_back(predict_disambiguation(baseline, turn_rng));
            golds.push_back(*t.disambiguation_label);
        }
    }
    return accuracy(preds, golds);
}

}  // namespace sitdial
