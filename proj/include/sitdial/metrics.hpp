#pragma once

// Scoring for both tasks: micro-averaged object F1 over predicted vs gold
// object-ID multisets, plain accuracy for disambiguation, and the slice
// breakdowns around disambiguation turns.

#include <algorithm>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "common.hpp"
#include "corpus.hpp"

namespace sitdial {

struct LengthMismatch : Error {
    using Error::Error;
};
struct Empty : Error {
    using Error::Error;
};

struct EvalReport {
    std::size_t tp = 0, fp = 0, fn = 0;
    std::size_t n_turns = 0;
    double precision = 1.0;
    double recall = 1.0;
    double f1 = 1.0;
    double pr_mean = 1.0;  // arithmetic mean of precision and recall (the paper's literal phrasing)
    std::optional<double> accuracy;
    bool defined = true;  // false for empty slices (n=0)
    std::map<std::string, EvalReport> slices;

    ordered_json to_json() const {
        ordered_json j;
        j["n_turns"] = n_turns;
        j["tp"] = tp;
        j["fp"] = fp;
        j["fn"] = fn;
        if (defined) {
            j["precision"] = precision;
            j["recall"] = recall;
            j["f1"] = f1;
            j["pr_mean"] = pr_mean;
        } else {
            j["f1"] = nullptr;
        }
        if (accuracy) j["accuracy"] = *accuracy;
        if (!slices.empty()) {
            ordered_json s = ordered_json::object();
            for (const auto& [name, rep] : slices) s[name] = rep.to_json();
            j["slices"] = std::move(s);
        }
        return j;
    }
};

namespace detail {

// Multiset overlap counts for one turn.
inline void count_turn(const std::vector<int>& pred, const std::vector<int>& gold,
                       std::size_t& tp, std::size_t& fp, std::size_t& fn) {
    std::map<int, std::size_t> pc, gc;
    for (int id : pred) ++pc[id];
    for (int id : gold) ++gc[id];
    std::size_t inter = 0;
    for (const auto& [id, c] : pc) {
        auto it = gc.find(id);
        if (it != gc.end()) inter += std::min(c, it->second);
    }
    tp += inter;
    fp += pred.size() - inter;
    fn += gold.size() - inter;
}

inline void finalize(EvalReport& r) {
    // 0/0 convention: an empty prediction against an empty gold is perfect.
    r.precision = (r.tp + r.fp) ? double(r.tp) / double(r.tp + r.fp) : 1.0;
    r.recall = (r.tp + r.fn) ? double(r.tp) / double(r.tp + r.fn) : 1.0;
    std::size_t denom = 2 * r.tp + r.fp + r.fn;
    r.f1 = denom ? 2.0 * double(r.tp) / double(denom) : 1.0;
    r.pr_mean = 0.5 * (r.precision + r.recall);
    r.defined = true;
}

}  // namespace detail

// predictions[i] scored against golds[i]; micro-aggregated over turns.
inline EvalReport object_f1(const std::vector<std::vector<int>>& predictions,
                            const std::vector<std::vector<int>>& golds) {
    if (predictions.size() != golds.size())
        throw LengthMismatch("object_f1: " + std::to_string(predictions.size()) + " predictions vs " +
                             std::to_string(golds.size()) + " golds");
    EvalReport r;
    r.n_turns = golds.size();
    for (std::size_t i = 0; i < golds.size(); ++i)
        detail::count_turn(predictions[i], golds[i], r.tp, r.fp, r.fn);
    detail::finalize(r);
    return r;
}

inline double accuracy(const std::vector<bool>& predictions, const std::vector<bool>& golds) {
    if (predictions.size() != golds.size()) throw LengthMismatch("accuracy: length mismatch");
    if (golds.empty()) throw Empty("accuracy: no samples");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < golds.size(); ++i)
        if (predictions[i] == golds[i]) ++hits;
    return double(hits) / double(golds.size());
}

// ---------------------------------------------------------------------------
// Slice evaluation

// One prediction per evaluated turn, keyed by (dialogue_id, turn_index).
// Turns with absent targets are excluded; evaluated turns missing from the
// map are scored as empty predictions.
using PredictionMap = std::map<std::pair<std::string, int>, std::vector<int>>;

inline EvalReport slice_eval(const PredictionMap& predictions, const Corpus& corpus) {
    struct Acc {
        EvalReport rep;
        bool touched = false;
    };
    EvalReport global;
    std::map<std::string, Acc> accs;
    for (const char* name :
         {"all_labeled_turns", "disamb_true_turns", "disamb_false_turns", "post_clarification_turns"})
        accs[name] = Acc{};

    static const std::vector<int> kEmpty;
    for (const auto& d : corpus.dialogues) {
        for (std::size_t i = 0; i < d.turns.size(); ++i) {
            const Turn& t = d.turns[i];
            if (!t.coref_targets) continue;
            auto it = predictions.find({d.dialogue_id, t.turn_index});
            const std::vector<int>& pred = (it != predictions.end()) ? it->second : kEmpty;
            auto add = [&](EvalReport& r) {
                ++r.n_turns;
                detail::count_turn(pred, *t.coref_targets, r.tp, r.fp, r.fn);
            };
            add(global);
            if (t.disambiguation_label) {
                accs["all_labeled_turns"].touched = true;
                add(accs["all_labeled_turns"].rep);
                auto& which = *t.disambiguation_label ? accs["disamb_true_turns"] : accs["disamb_false_turns"];
                which.touched = true;
                add(which.rep);
            }
            if (i > 0 && d.turns[i - 1].disambiguation_label &&
                *d.turns[i - 1].disambiguation_label) {
                accs["post_clarification_turns"].touched = true;
                add(accs["post_clarification_turns"].rep);
            }
        }
    }
    detail::finalize(global);
    for (auto& [name, acc] : accs) {
        if (acc.rep.n_turns > 0)
            detail::finalize(acc.rep);
        else
            acc.rep.defined = false;  // n=0 slice, f1 undefined
        global.slices[name] = acc.rep;
    }
    return global;
}

// ---------------------------------------------------------------------------
// Rendering

inline std::string report_markdown_row(const std::string& name, const EvalReport& r) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(2);
    os << "| " << name << " | ";
    if (r.defined)
        os << 100.0 * r.f1;
    else
        os << "n/a";
    os << " | " << r.n_turns << " |";
    return os.str();
}

inline std::string report_markdown(const EvalReport& r, const std::string& title) {
    std::ostringstream os;
    os << "| " << title << " | Object F1 | Turns |\n|---|---|---|\n";
    os << report_markdown_row("overall", r) << "\n";
    for (const auto& [name, rep] : r.slices) os << report_markdown_row(name, rep) << "\n";
    return os.str();
}

}  // namespace sitdial
