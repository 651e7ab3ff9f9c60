#pragma once

// Synthetic corpus generator. Produces corpora whose measurable statistics
// land on configured targets: scene-size moments, small-ID skew of the
// prediction targets, disambiguation label balance, target-in-history rate,
// vision-extractor class noise, and the same-description RoI cosine audit.
//
// Calibration strategy: corpus-level properties are assigned by quota decks
// (exact up to rounding) rather than independent coin flips, and scene sizes
// come from stratified quantiles of the clamped normal, so the targets are
// hit tightly at modest corpus sizes and for every seed. Utterances come
// from template families whose POS makeup injects the label correlations by
// construction.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "classes.hpp"
#include "common.hpp"
#include "corpus.hpp"

namespace sitdial {

struct InfeasibleSpec : Error {
    using Error::Error;
};
struct NoConvergence : Error {
    using Error::Error;
};

struct CorpusSpec {
    std::size_t n_dialogues = 800;
    double scene_size_mean = 27.6;
    double scene_size_sd = 20.7;
    int scene_size_max = 141;
    double target_id_frac_below_10 = 0.525;
    double target_id_frac_below_5 = 0.301;
    double disamb_true_rate = 0.494;
    double target_in_history_rate = 0.37;
    double class_noise_accuracy = 0.654;
    double roi_same_class_cos_mean = 0.62;
    double roi_same_class_cos_sd = 0.14;
    std::size_t roi_dim = 64;
    std::uint64_t seed = 1;

    // dialogue shape
    int min_turns = 4;
    int max_turns = 6;
    double labeled_turn_rate = 0.22;

    void validate() const {
        auto prob = [](double p, const char* name) {
            if (!(p >= 0.0 && p <= 1.0)) throw InfeasibleSpec(std::string(name) + " outside [0,1]");
        };
        prob(target_id_frac_below_10, "target_id_frac_below_10");
        prob(target_id_frac_below_5, "target_id_frac_below_5");
        prob(disamb_true_rate, "disamb_true_rate");
        prob(target_in_history_rate, "target_in_history_rate");
        prob(class_noise_accuracy, "class_noise_accuracy");
        prob(labeled_turn_rate, "labeled_turn_rate");
        if (target_id_frac_below_5 > target_id_frac_below_10)
            throw InfeasibleSpec("below_5 fraction exceeds below_10 fraction");
        if (scene_size_max < 1 || scene_size_max > 141)
            throw InfeasibleSpec("scene_size_max outside [1,141]");
        if (!(scene_size_mean >= 1.0 && scene_size_mean <= double(scene_size_max)))
            throw InfeasibleSpec("scene_size_mean outside [1, max]");
        if (scene_size_sd < 0.0) throw InfeasibleSpec("scene_size_sd negative");
        if (min_turns < 1 || max_turns < min_turns) throw InfeasibleSpec("bad turn count range");
        if (roi_dim < 2) throw InfeasibleSpec("roi_dim must be >= 2");
        if (!(roi_same_class_cos_mean > 0.0 && roi_same_class_cos_mean <= 1.0))
            throw InfeasibleSpec("roi_same_class_cos_mean outside (0,1]");
    }

    ordered_json to_json() const {
        ordered_json j;
        j["n_dialogues"] = n_dialogues;
        j["scene_size_mean"] = scene_size_mean;
        j["scene_size_sd"] = scene_size_sd;
        j["scene_size_max"] = scene_size_max;
        j["target_id_frac_below_10"] = target_id_frac_below_10;
        j["target_id_frac_below_5"] = target_id_frac_below_5;
        j["disamb_true_rate"] = disamb_true_rate;
        j["target_in_history_rate"] = target_in_history_rate;
        j["class_noise_accuracy"] = class_noise_accuracy;
        j["roi_same_class_cos_mean"] = roi_same_class_cos_mean;
        j["roi_same_class_cos_sd"] = roi_same_class_cos_sd;
        j["roi_dim"] = roi_dim;
        j["seed"] = seed;
        j["min_turns"] = min_turns;
        j["max_turns"] = max_turns;
        j["labeled_turn_rate"] = labeled_turn_rate;
        return j;
    }

    static CorpusSpec from_json(const ordered_json& j) {
        CorpusSpec s;
        s.n_dialogues = j.value("n_dialogues", s.n_dialogues);
        s.scene_size_mean = j.value("scene_size_mean", s.scene_size_mean);
        s.scene_size_sd = j.value("scene_size_sd", s.scene_size_sd);
        s.scene_size_max = j.value("scene_size_max", s.scene_size_max);
        s.target_id_frac_below_10 = j.value("target_id_frac_below_10", s.target_id_frac_below_10);
        s.target_id_frac_below_5 = j.value("target_id_frac_below_5", s.target_id_frac_below_5);
        s.disamb_true_rate = j.value("disamb_true_rate", s.disamb_true_rate);
        s.target_in_history_rate = j.value("target_in_history_rate", s.target_in_history_rate);
        s.class_noise_accuracy = j.value("class_noise_accuracy", s.class_noise_accuracy);
        s.roi_same_class_cos_mean = j.value("roi_same_class_cos_mean", s.roi_same_class_cos_mean);
        s.roi_same_class_cos_sd = j.value("roi_same_class_cos_sd", s.roi_same_class_cos_sd);
        s.roi_dim = j.value("roi_dim", s.roi_dim);
        s.seed = j.value("seed", s.seed);
        s.min_turns = j.value("min_turns", s.min_turns);
        s.max_turns = j.value("max_turns", s.max_turns);
        s.labeled_turn_rate = j.value("labeled_turn_rate", s.labeled_turn_rate);
        return s;
    }
};

// ---------------------------------------------------------------------------
// Utterance templates

enum class LengthRegime { short_form, long_form };

struct UtteranceTemplate {
    std::string pattern;  // slots: {type} {colour} {type2} {colour2}
    LengthRegime regime = LengthRegime::short_form;

    std::string render(const std::string& colour, const std::string& type,
                       const std::string& colour2 = "", const std::string& type2 = "") const {
        std::string out = pattern;
        auto sub = [&out](const std::string& slot, const std::string& value) {
            std::size_t pos;
            while ((pos = out.find(slot)) != std::string::npos) out.replace(pos, slot.size(), value);
        };
        sub("{colour2}", colour2);
        sub("{type2}", type2);
        sub("{colour}", colour);
        sub("{type}", type);
        return out;
    }
};

namespace templates {

// Turns that need disambiguation: shorter, wh-question-leaning, and the
// object is referenced by type alone (which is what makes it ambiguous).
// The POS makeup deliberately overlaps the no-disambiguation family so the
// label correlations come out medium-weak rather than separable.
inline const std::vector<UtteranceTemplate>& disamb_true() {
    static const std::vector<UtteranceTemplate> v = {
        {"what 's the price of that {type} over there ?", LengthRegime::short_form},
        {"what do you have in the back for a new {type} ?", LengthRegime::short_form},
        {"who makes the {type} on that small counter over there ?", LengthRegime::short_form},
        {"how much is that {type} , the new one in the corner ?", LengthRegime::short_form},
        {"is there a nice {type} available somewhere , maybe near the front ?",
         LengthRegime::short_form},
        {"what would the price be for two of those {type} ?", LengthRegime::short_form},
        {"can you tell me what the {type} costs and which size it is ?", LengthRegime::short_form},
        {"which of these {type} do you mean , the left one or the other one ?",
         LengthRegime::short_form},
        {"i am not sure , what do you have in that style for a new {type} like this ?",
         LengthRegime::short_form},
        {"what about the other {type} near it , who makes that one and how much is it ?",
         LengthRegime::short_form},
        {"that {type} by the door looks nice , is it new ?", LengthRegime::short_form},
        {"hm , i want a {type} in a dark shade , what would you suggest ?",
         LengthRegime::short_form},
    };
    return v;
}

// Turns that need no disambiguation: longer, preposition- and
// adjective-heavy, and the reference carries colour plus type.
inline const std::vector<UtteranceTemplate>& disamb_false() {
    static const std::vector<UtteranceTemplate> v = {
        {"can you tell me the sizes and prices of the two {colour} {type} in the cubbies on "
         "the right ?",
         LengthRegime::long_form},
        {"i 'd like to get that {colour} {type} on the left , the big one , please .",
         LengthRegime::long_form},
        {"please put the {colour} {type} from that rack into my cart when you get a chance .",
         LengthRegime::long_form},
        {"could you show me the {colour} {type} with the stripes from the second row , and "
         "which sizes remain ?",
         LengthRegime::long_form},
        {"what would the total be for the {colour} {type} on the lower level of the main "
         "store ?",
         LengthRegime::long_form},
        {"the {colour} {type} in the front row by the mirror looks perfect , i 'll take it "
         "today .",
         LengthRegime::long_form},
        {"i am interested in the {colour} {type} from the new collection , the one the poster "
         "shows .",
         LengthRegime::long_form},
        {"i will take the {colour} {type} hanging under the display rack , whose price seemed "
         "fair .",
         LengthRegime::long_form},
        {"which price tag goes with the {colour} {type} by the window , the one beside the "
         "boxes ?",
         LengthRegime::long_form},
        {"my friend wants the {colour} {type} from the far corner , and when exactly could "
         "you deliver it ?",
         LengthRegime::long_form},
        {"put the {colour} {type} and the matching scarf from the front counter into my "
         "basket , please .",
         LengthRegime::long_form},
        {"when you have a moment , please bring us the {colour} {type} from the fitting room "
         "at the end .",
         LengthRegime::long_form},
    };
    return v;
}

// Long-form variants for labeled no-disambiguation turns that carry two
// targets or a duplicated target, so those turns stay in the long register.
inline const std::vector<UtteranceTemplate>& disamb_false_double() {
    static const std::vector<UtteranceTemplate> v = {
        {"please pack the {colour} {type} from the front row and the {colour2} {type2} by the "
         "register for me .",
         LengthRegime::long_form},
        {"could i get the {colour} {type} near the entrance and the {colour2} {type2} from "
         "the second shelf over there ?",
         LengthRegime::long_form},
        {"what would i pay for the {colour} {type} in the corner and the {colour2} {type2} "
         "beside it ?",
         LengthRegime::long_form},
    };
    return v;
}

inline const std::vector<UtteranceTemplate>& disamb_false_duplicate() {
    static const std::vector<UtteranceTemplate> v = {
        {"i 'll take two of the {colour} {type} from the second rack , with the tags still "
         "on .",
         LengthRegime::long_form},
        {"give me two of the {colour} {type} by the mirror at the front , please .",
         LengthRegime::long_form},
    };
    return v;
}

// Unlabeled referring turns: neutral register, colour plus type.
inline const std::vector<UtteranceTemplate>& neutral_single() {
    static const std::vector<UtteranceTemplate> v = {
        {"i 'd like to get that {colour} {type} , please .", LengthRegime::short_form},
        {"can i see the {colour} {type} ?", LengthRegime::short_form},
        {"i 'll take the {colour} {type} .", LengthRegime::short_form},
        {"please show me the {colour} {type} .", LengthRegime::short_form},
        {"could i try the {colour} {type} on ?", LengthRegime::short_form},
        {"add the {colour} {type} to my cart , please .", LengthRegime::short_form},
    };
    return v;
}

inline const std::vector<UtteranceTemplate>& neutral_double() {
    static const std::vector<UtteranceTemplate> v = {
        {"i 'd like the {colour} {type} and the {colour2} {type2} , please .",
         LengthRegime::long_form},
        {"please give me both the {colour} {type} and the {colour2} {type2} .",
         LengthRegime::long_form},
        {"can i get the {colour} {type} together with the {colour2} {type2} ?",
         LengthRegime::long_form},
    };
    return v;
}

inline const std::vector<UtteranceTemplate>& neutral_duplicate() {
    static const std::vector<UtteranceTemplate> v = {
        {"i 'll take two of the {colour} {type} , please .", LengthRegime::short_form},
        {"give me two of the {colour} {type} .", LengthRegime::short_form},
    };
    return v;
}

inline const std::vector<UtteranceTemplate>& no_reference() {
    static const std::vector<UtteranceTemplate> v = {
        {"thank you , that will be all .", LengthRegime::short_form},
        {"sounds good , thanks !", LengthRegime::short_form},
        {"great , please go ahead .", LengthRegime::short_form},
        {"no thanks , i am just looking .", LengthRegime::short_form},
        {"that works for me , thanks a lot .", LengthRegime::short_form},
    };
    return v;
}

inline const std::vector<std::string>& system_fillers() {
    static const std::vector<std::string> v = {
        "of course , one moment please .",
        "sure , let me check that for you .",
        "certainly , anything else ?",
        "happy to help with that .",
    };
    return v;
}

}  // namespace templates

// ---------------------------------------------------------------------------
// Scene-size calibration: clamped rounded normal, stratified quantiles.

namespace detail {

// E[clamp(round(X), 1, hi)] for X ~ N(mu, sd).
inline double clamped_round_normal_mean(double mu, double sd, int hi) {
    if (sd <= 0.0) return std::clamp(std::round(mu), 1.0, double(hi));
    double total = 0.0;
    for (int k = 1; k <= hi; ++k) {
        double lo_b = (k == 1) ? -1e30 : (double(k) - 0.5 - mu) / sd;
        double hi_b = (k == hi) ? 1e30 : (double(k) + 0.5 - mu) / sd;
        total += double(k) * (normal_cdf(hi_b) - normal_cdf(lo_b));
    }
    return total;
}

// Pre-clamp location such that the clamped rounded mean hits the target.
inline double calibrate_size_mu(double target_mean, double sd, int hi) {
    if (sd <= 0.0) return target_mean;
    double lo = -4.0 * sd, up = double(hi) + 4.0 * sd;
    for (int i = 0; i < 96; ++i) {
        double mid = 0.5 * (lo + up);
        if (clamped_round_normal_mean(mid, sd, hi) < target_mean)
            lo = mid;
        else
            up = mid;
    }
    return 0.5 * (lo + up);
}

inline int size_from_quantile(double u, double mu, double sd, int hi) {
    double x = (sd <= 0.0) ? mu : mu + sd * normal_quantile(u);
    return int(std::clamp(std::round(x), 1.0, double(hi)));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// RoI noise calibration

namespace detail {

struct RoiNoise {
    double base_scale = 0.0;   // sigma0
    double scale_spread = 0.0;  // lognormal spread tau; sigma_i = sigma0 * exp(tau * z_i)
};

// Closed-form expected cosine for a pair with noise scales (a, b) around a
// unit prototype: E[X.Y] = 1, E|X|^2 = 1 + a^2 F, so the ratio estimator
// gives E[cos] ~ 1 / sqrt((1 + a^2 F)(1 + b^2 F)). Averaged over the
// lognormal scale mixture by equal-probability stratified quadrature.
inline double roi_cosine_mean_estimate(double sigma0, double tau, std::size_t dim) {
    const int kStrata = 24;
    double f = double(dim);
    double total = 0.0;
    for (int i = 0; i < kStrata; ++i) {
        double za = normal_quantile((double(i) + 0.5) / kStrata);
        double a = sigma0 * std::exp(tau * za);
        for (int j = 0; j < kStrata; ++j) {
            double zb = normal_quantile((double(j) + 0.5) / kStrata);
            double b = sigma0 * std::exp(tau * zb);
            total += 1.0 / std::sqrt((1.0 + a * a * f) * (1.0 + b * b * f));
        }
    }
    return total / double(kStrata * kStrata);
}

// Monte-Carlo cosine SD; common random numbers keep it smooth in tau.
inline double roi_cosine_sd_estimate(double sigma0, double tau, std::size_t dim,
                                     std::uint64_t seed, std::size_t n_pairs = 2048) {
    Rng r(splitmix64(seed) ^ 0x9d2c5680ULL);
    std::vector<double> proto(dim);
    double norm = 0.0;
    for (auto& x : proto) {
        x = r.normal();
        norm += x * x;
    }
    norm = std::sqrt(norm);
    for (auto& x : proto) x /= norm;
    double sum = 0.0, sum2 = 0.0;
    std::vector<double> a(dim), b(dim);
    for (std::size_t p = 0; p < n_pairs; ++p) {
        double sa = sigma0 * std::exp(tau * r.normal());
        double sb = sigma0 * std::exp(tau * r.normal());
        for (std::size_t i = 0; i < dim; ++i) a[i] = proto[i] + sa * r.normal();
        for (std::size_t i = 0; i < dim; ++i) b[i] = proto[i] + sb * r.normal();
        double c = cosine_similarity(a, b);
        sum += c;
        sum2 += c * c;
    }
    double mean = sum / double(n_pairs);
    return std::sqrt(std::max(0.0, sum2 / double(n_pairs) - mean * mean));
}

inline double calibrate_roi_base_scale(double target_mean, double tau, std::size_t dim) {
    if (target_mean >= 1.0) return 0.0;  // identical vectors
    double lo = 0.0, hi = 8.0;
    for (int i = 0; i < 64; ++i) {
        double mid = 0.5 * (lo + hi);
        if (roi_cosine_mean_estimate(mid, tau, dim) > target_mean)
            lo = mid;  // more noise lowers the cosine
        else
            hi = mid;
    }
    double s = 0.5 * (lo + hi);
    if (std::fabs(roi_cosine_mean_estimate(s, tau, dim) - target_mean) > 0.02)
        throw NoConvergence("roi noise calibration did not reach target mean " +
                            std::to_string(target_mean));
    return s;
}

inline RoiNoise calibrate_roi(const CorpusSpec& spec) {
    if (!(spec.roi_same_class_cos_mean > 0.0 && spec.roi_same_class_cos_mean <= 1.0))
        throw InfeasibleSpec("roi_same_class_cos_mean must lie in (0,1]; prototype-plus-noise "
                             "keeps the expected cosine positive");
    struct Key {
        double mean, sd;
        std::size_t dim;
        std::uint64_t seed;
        bool operator<(const Key& o) const {
            return std::tie(mean, sd, dim, seed) < std::tie(o.mean, o.sd, o.dim, o.seed);
        }
    };
    static std::map<Key, RoiNoise> cache;
    Key key{spec.roi_same_class_cos_mean, spec.roi_same_class_cos_sd, spec.roi_dim, spec.seed};
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;

    RoiNoise n;
    if (spec.roi_same_class_cos_mean < 1.0) {
        // Outer bisection on the scale spread for the SD target, inner
        // calibration of the base scale for the mean target.
        double lo = 0.0, hi = 2.0;
        for (int i = 0; i < 16; ++i) {
            double tau = 0.5 * (lo + hi);
            double s0 = calibrate_roi_base_scale(spec.roi_same_class_cos_mean, tau, spec.roi_dim);
            double sd = roi_cosine_sd_estimate(s0, tau, spec.roi_dim, spec.seed);
            if (sd < spec.roi_same_class_cos_sd)
                lo = tau;
            else
                hi = tau;
        }
        n.scale_spread = 0.5 * (lo + hi);
        n.base_scale =
            calibrate_roi_base_scale(spec.roi_same_class_cos_mean, n.scale_spread, spec.roi_dim);
    }
    cache[key] = n;
    return n;
}

}  // namespace detail

// Noise scale such that the expected same-class cosine hits the spec target,
// at the spread calibrated for the SD target.
inline double calibrate_roi_noise(const CorpusSpec& spec) {
    return detail::calibrate_roi(spec).base_scale;
}

// ---------------------------------------------------------------------------
// Generation

namespace detail {

enum class TurnKind { absent, empty, single, two_distinct, duplicate };

struct TurnPlan {
    TurnKind kind = TurnKind::empty;
    std::optional<bool> label;
    bool in_history = false;
};

struct DialoguePlan {
    int size = 0;
    int n_turns = 0;
    std::vector<TurnPlan> turns;
};

inline std::string snake(const std::string& s) {
    std::string out = s;
    for (char& c : out)
        if (c == ' ') c = '_';
    return out;
}

// Draw `count` distinct object ids with the small-ID skew over the ranges
// [0,5), [5,10), [10,141).
inline std::vector<int> draw_scene_ids(int count, Rng& rng) {
    struct Range {
        int lo, hi;
        double w;
    };
    const Range ranges[3] = {{0, 5, 0.22}, {5, 10, 0.18}, {10, 141, 0.60}};
    std::set<int> used;
    std::vector<int> out;
    while (int(out.size()) < count) {
        double wsum = 0.0;
        for (const auto& r : ranges) {
            int avail = (r.hi - r.lo) - int(std::count_if(used.begin(), used.end(), [&](int id) {
                            return id >= r.lo && id < r.hi;
                        }));
            if (avail > 0) wsum += r.w;
        }
        double u = rng.uniform() * wsum;
        for (const auto& r : ranges) {
            int avail = 0;
            for (int id = r.lo; id < r.hi; ++id)
                if (!used.count(id)) ++avail;
            if (avail == 0) continue;
            if (u < r.w) {
                int k = int(rng.uniform_int(0, avail - 1));
                for (int id = r.lo; id < r.hi; ++id) {
                    if (used.count(id)) continue;
                    if (k-- == 0) {
                        used.insert(id);
                        out.push_back(id);
                        break;
                    }
                }
                break;
            }
            u -= r.w;
        }
    }
    return out;
}

struct BucketQuota {
    // target instance counts per id bucket: [0,5), [5,10), [10,inf)
    double frac[3];
    std::size_t emitted[3] = {0, 0, 0};
    std::size_t total = 0;

    explicit BucketQuota(const CorpusSpec& spec) {
        frac[0] = spec.target_id_frac_below_5;
        frac[1] = spec.target_id_frac_below_10 - spec.target_id_frac_below_5;
        frac[2] = 1.0 - spec.target_id_frac_below_10;
    }

    static int bucket_of(int id) { return id < 5 ? 0 : (id < 10 ? 1 : 2); }

    // Most-behind available bucket (largest fractional deficit).
    int choose(const bool available[3]) {
        int best = -1;
        double best_deficit = -1e18;
        for (int b = 0; b < 3; ++b) {
            if (!available[b]) continue;
            double achieved = total ? double(emitted[b]) / double(total) : 0.0;
            double deficit = frac[b] - achieved;
            if (deficit > best_deficit) {
                best_deficit = deficit;
                best = b;
            }
        }
        return best;
    }

    void account(int id) {
        ++emitted[bucket_of(id)];
        ++total;
    }
};

}  // namespace detail

inline Corpus generate(const CorpusSpec& spec, Split split = Split::devtest) {
    spec.validate();
    Corpus corpus;
    corpus.split = split;
    if (spec.n_dialogues == 0) return corpus;

    const Rng base(spec.seed ^ (0xD1A0ULL + std::uint64_t(split)));
    Rng plan_rng = base.derive(1);
    Rng proto_rng = base.derive(2);

    // ---- pass A: corpus-level plans -------------------------------------
    const std::size_t n = spec.n_dialogues;
    double mu = detail::calibrate_size_mu(spec.scene_size_mean, spec.scene_size_sd, spec.scene_size_max);

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    plan_rng.shuffle(order);
    std::vector<detail::DialoguePlan> plans(n);
    for (std::size_t i = 0; i < n; ++i) {
        double u = (double(order[i]) + 0.5) / double(n);
        plans[i].size = detail::size_from_quantile(u, mu, spec.scene_size_sd, spec.scene_size_max);
        plans[i].n_turns = int(plan_rng.uniform_int(spec.min_turns, spec.max_turns));
        plans[i].turns.resize(std::size_t(plans[i].n_turns));
    }

    // turn kinds: unlabeled mix (absent 6%, empty 15%, single 55%, two 18%, dup 6%)
    struct Slot {
        std::size_t d, t;
    };
    std::vector<Slot> slots;
    for (std::size_t d = 0; d < n; ++d)
        for (std::size_t t = 0; t < plans[d].turns.size(); ++t) slots.push_back({d, t});

    for (const Slot& s : slots) {
        double u = plan_rng.uniform();
        detail::TurnPlan& tp = plans[s.d].turns[s.t];
        bool tiny_scene = plans[s.d].size < 2;
        if (u < 0.06)
            tp.kind = detail::TurnKind::absent;
        else if (u < 0.21)
            tp.kind = detail::TurnKind::empty;
        else if (u < 0.76 || tiny_scene)
            tp.kind = detail::TurnKind::single;
        else if (u < 0.94)
            tp.kind = detail::TurnKind::two_distinct;
        else
            tp.kind = detail::TurnKind::duplicate;
    }

    // disambiguation labels: exact quota over a shuffled slot order; true
    // labels need a scene that can host an ambiguity (>= 2 objects, the
    // generator forces a duplicated type there) and a referrable target.
    {
        std::vector<std::size_t> idx(slots.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        plan_rng.shuffle(idx);
        std::size_t n_labeled = std::size_t(std::llround(spec.labeled_turn_rate * double(slots.size())));
        std::size_t n_true = std::size_t(std::llround(spec.disamb_true_rate * double(n_labeled)));
        std::size_t labeled = 0, trues = 0;
        for (std::size_t i : idx) {
            if (labeled >= n_labeled) break;
            const Slot& s = slots[i];
            detail::TurnPlan& tp = plans[s.d].turns[s.t];
            if (tp.kind == detail::TurnKind::absent) continue;
            bool can_be_true = plans[s.d].size >= 2 && tp.kind != detail::TurnKind::empty &&
                               tp.kind != detail::TurnKind::two_distinct &&
                               tp.kind != detail::TurnKind::duplicate;
            if (trues < n_true && can_be_true) {
                tp.label = true;
                tp.kind = detail::TurnKind::single;  // one intended object, underspecified
                ++trues;
            } else {
                tp.label = false;
                if (tp.kind == detail::TurnKind::empty) tp.kind = detail::TurnKind::single;
            }
            ++labeled;
        }
    }

    // target-in-history: quota over non-empty-target turns; only turns with a
    // predecessor can be carried into history.
    {
        std::vector<Slot> with_targets;
        for (const Slot& s : slots) {
            detail::TurnKind k = plans[s.d].turns[s.t].kind;
            if (k == detail::TurnKind::single || k == detail::TurnKind::two_distinct ||
                k == detail::TurnKind::duplicate)
                with_targets.push_back(s);
        }
        std::vector<std::size_t> idx(with_targets.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        plan_rng.shuffle(idx);
        std::size_t want =
            std::size_t(std::llround(spec.target_in_history_rate * double(with_targets.size())));
        std::size_t got = 0;
        for (std::size_t i : idx) {
            if (got >= want) break;
            const Slot& s = with_targets[i];
            // needs a predecessor turn and enough objects that reserving a
            // mentionable target cannot starve the never-mention turns
            if (s.t == 0 || plans[s.d].size < 3) continue;
            plans[s.d].turns[s.t].in_history = true;
            ++got;
        }
    }

    // ---- pass B/C state shared across dialogues --------------------------
    detail::RoiNoise noise = detail::calibrate_roi(spec);

    // class prototypes: one unit vector per attested (colour, type) pair
    std::map<std::pair<std::string, std::string>, std::vector<double>> prototypes;
    for (const auto& combo : attested_combinations()) {
        std::vector<double> p(spec.roi_dim);
        double nrm = 0.0;
        for (auto& x : p) {
            x = proto_rng.normal();
            nrm += x * x;
        }
        nrm = std::sqrt(nrm);
        for (auto& x : p) x /= nrm;
        prototypes[{combo.first, combo.second}] = std::move(p);
    }

    detail::BucketQuota quota(spec);

    char idbuf[32];
    for (std::size_t d = 0; d < n; ++d) {
        Rng rng = base.derive(100 + d);
        const detail::DialoguePlan& plan = plans[d];

        Scene scene;
        std::snprintf(idbuf, sizeof idbuf, "S%05zu", d);
        scene.scene_id = idbuf;
        scene.domain = (d % 3 == 2) ? Domain::furniture : Domain::fashion;

        std::vector<int> ids = detail::draw_scene_ids(plan.size, rng);
        for (int id : ids) {
            SceneObject o;
            o.object_index = id;
            const auto& combo = rng.pick(attested_combinations());
            o.gold_colour = combo.first;
            o.gold_type = combo.second;
            scene.objects.push_back(std::move(o));
        }
        // force a duplicated type so type-only references can be ambiguous
        if (scene.objects.size() >= 2) {
            std::map<std::string, int> type_counts;
            for (const auto& o : scene.objects) ++type_counts[o.gold_type];
            bool has_dup = false;
            for (const auto& [t, c] : type_counts)
                if (c >= 2) has_dup = true;
            if (!has_dup) {
                scene.objects[1].gold_type = scene.objects[0].gold_type;
                auto colours = attested_colours_for(scene.objects[1].gold_type);
                scene.objects[1].gold_colour = rng.pick(colours);
            }
        }
        // prefabs, boxes, noisy classes, rois
        for (auto& o : scene.objects) {
            int variant = int(rng.uniform_int(0, 2));
            o.prefab_id = "assets/" + detail::snake(o.gold_type) + "_" + o.gold_colour + "_" +
                          std::to_string(variant);
            double bw = 20.0 + rng.uniform() * 380.0;
            double bh = 20.0 + rng.uniform() * 380.0;
            o.bbox = {rng.uniform() * (scene.image_w - bw), rng.uniform() * (scene.image_h - bh), bw,
                      bh};
            if (rng.bernoulli(spec.class_noise_accuracy)) {
                o.pred_colour = o.gold_colour;
                o.pred_type = o.gold_type;
            } else if (rng.bernoulli(0.7)) {
                // colour confusion within the same type
                auto colours = attested_colours_for(o.gold_type);
                std::string c = rng.pick(colours);
                if (c == o.gold_colour) {
                    for (const auto& alt : colours)
                        if (alt != o.gold_colour) {
                            c = alt;
                            break;
                        }
                }
                o.pred_colour = c;
                o.pred_type = o.gold_type;
            } else {
                const auto& combo = rng.pick(attested_combinations());
                o.pred_colour = combo.first;
                o.pred_type = combo.second;
            }
            const auto& proto = prototypes[{o.gold_colour, o.gold_type}];
            double sigma = noise.base_scale * std::exp(noise.scale_spread * rng.normal());
            o.roi.resize(spec.roi_dim);
            for (std::size_t i = 0; i < spec.roi_dim; ++i) o.roi[i] = proto[i] + sigma * rng.normal();
        }

        // ---- targets ------------------------------------------------------
        Dialogue dia;
        std::snprintf(idbuf, sizeof idbuf, "D%05zu", d);
        dia.dialogue_id = idbuf;
        dia.scene_id = scene.scene_id;

        std::set<int> taken_false;  // targets that must never be mentioned
        std::set<int> taken_true;   // targets that must be mentioned before their turn
        std::map<std::string, int> type_counts;
        for (const auto& o : scene.objects) ++type_counts[o.gold_type];

        struct TurnDraft {
            std::vector<int> targets;
            bool absent = false;
            std::optional<bool> label;
            bool in_history = false;
        };
        std::vector<TurnDraft> drafts(plan.turns.size());

        auto pick_target = [&](bool need_dup_type, bool want_history) -> const SceneObject* {
            bool available[3] = {false, false, false};
            std::vector<const SceneObject*> pool;
            for (const auto& o : scene.objects) {
                if (need_dup_type && type_counts[o.gold_type] < 2) continue;
                if (want_history && taken_false.count(o.object_index)) continue;
                if (!want_history && taken_true.count(o.object_index)) continue;
                pool.push_back(&o);
                available[detail::BucketQuota::bucket_of(o.object_index)] = true;
            }
            if (pool.empty()) {
                // relax the dup-type preference rather than fail
                for (const auto& o : scene.objects) {
                    if (want_history && taken_false.count(o.object_index)) continue;
                    if (!want_history && taken_true.count(o.object_index)) continue;
                    pool.push_back(&o);
                    available[detail::BucketQuota::bucket_of(o.object_index)] = true;
                }
            }
            if (pool.empty()) return nullptr;
            int b = quota.choose(available);
            std::vector<const SceneObject*> in_bucket;
            for (const auto* o : pool)
                if (detail::BucketQuota::bucket_of(o->object_index) == b) in_bucket.push_back(o);
            return in_bucket[std::size_t(rng.uniform_int(0, std::int64_t(in_bucket.size()) - 1))];
        };

        // two passes: history-carried turns reserve their targets before the
        // never-mention turns consume the pool
        std::vector<std::size_t> draft_order;
        for (std::size_t t = 0; t < plan.turns.size(); ++t)
            if (plan.turns[t].in_history) draft_order.push_back(t);
        for (std::size_t t = 0; t < plan.turns.size(); ++t)
            if (!plan.turns[t].in_history) draft_order.push_back(t);

        for (std::size_t t : draft_order) {
            const detail::TurnPlan& tp = plan.turns[t];
            TurnDraft& draft = drafts[t];
            draft.label = tp.label;
            draft.in_history = tp.in_history;
            switch (tp.kind) {
                case detail::TurnKind::absent: draft.absent = true; break;
                case detail::TurnKind::empty: break;
                case detail::TurnKind::single:
                case detail::TurnKind::duplicate: {
                    bool need_dup = tp.label && *tp.label;
                    const SceneObject* o = pick_target(need_dup, tp.in_history);
                    if (!o) break;
                    draft.targets.push_back(o->object_index);
                    quota.account(o->object_index);
                    if (tp.kind == detail::TurnKind::duplicate) {
                        draft.targets.push_back(o->object_index);
                        quota.account(o->object_index);
                    }
                    (tp.in_history ? taken_true : taken_false).insert(o->object_index);
                    break;
                }
                case detail::TurnKind::two_distinct: {
                    for (int k = 0; k < 2; ++k) {
                        const SceneObject* o = pick_target(false, tp.in_history);
                        if (!o) break;
                        if (!draft.targets.empty() && draft.targets[0] == o->object_index) continue;
                        draft.targets.push_back(o->object_index);
                        quota.account(o->object_index);
                        (tp.in_history ? taken_true : taken_false).insert(o->object_index);
                    }
                    break;
                }
            }
        }

        // ---- system mentions ------------------------------------------------
        // carriers: an in-history turn's first target is mentioned at some
        // earlier turn (mostly t-1); fillers avoid the never-mention set.
        std::vector<std::vector<int>> mentions(plan.turns.size());
        for (std::size_t t = 1; t < drafts.size(); ++t) {
            if (!drafts[t].in_history || drafts[t].targets.empty()) continue;
            std::size_t carrier = (t == 1 || rng.bernoulli(0.8))
                                      ? t - 1
                                      : std::size_t(rng.uniform_int(0, std::int64_t(t) - 1));
            mentions[carrier].push_back(drafts[t].targets[0]);
        }
        for (std::size_t t = 0; t < mentions.size(); ++t) {
            int fillers = int(rng.uniform_int(1, 2));
            for (int k = 0; k < fillers && int(scene.objects.size()) > 0; ++k) {
                const SceneObject& o =
                    scene.objects[std::size_t(rng.uniform_int(0, std::int64_t(scene.objects.size()) - 1))];
                if (taken_false.count(o.object_index)) continue;
                if (std::find(mentions[t].begin(), mentions[t].end(), o.object_index) !=
                    mentions[t].end())
                    continue;
                mentions[t].push_back(o.object_index);
            }
        }

        // ---- utterances -----------------------------------------------------
        for (std::size_t t = 0; t < drafts.size(); ++t) {
            Turn turn;
            turn.turn_index = int(t);
            const TurnDraft& draft = drafts[t];
            turn.disambiguation_label = draft.label;
            if (!draft.absent) turn.coref_targets = draft.targets;
            turn.system_mentioned = mentions[t];

            auto obj_of = [&](int id) -> const SceneObject& {
                const SceneObject* o = scene.find(id);
                return *o;
            };

            if (draft.label && *draft.label && !draft.targets.empty()) {
                const auto& o = obj_of(draft.targets[0]);
                turn.user_utterance = rng.pick(templates::disamb_true()).render("", o.gold_type);
            } else if (draft.label && !*draft.label && !draft.targets.empty()) {
                const auto& o = obj_of(draft.targets[0]);
                if (draft.targets.size() >= 2 && draft.targets[0] != draft.targets[1]) {
                    const auto& o2 = obj_of(draft.targets[1]);
                    turn.user_utterance = rng.pick(templates::neutral_double())
                                              .render(o.gold_colour, o.gold_type, o2.gold_colour,
                                                      o2.gold_type);
                } else {
                    turn.user_utterance =
                        rng.pick(templates::disamb_false()).render(o.gold_colour, o.gold_type);
                }
            } else if (draft.targets.size() == 2 && draft.targets[0] == draft.targets[1]) {
                const auto& o = obj_of(draft.targets[0]);
                turn.user_utterance =
                    rng.pick(templates::neutral_duplicate()).render(o.gold_colour, o.gold_type);
            } else if (draft.targets.size() == 2) {
                const auto& o = obj_of(draft.targets[0]);
                const auto& o2 = obj_of(draft.targets[1]);
                turn.user_utterance = rng.pick(templates::neutral_double())
                                          .render(o.gold_colour, o.gold_type, o2.gold_colour,
                                                  o2.gold_type);
            } else if (draft.targets.size() == 1) {
                const auto& o = obj_of(draft.targets[0]);
                turn.user_utterance =
                    rng.pick(templates::neutral_single()).render(o.gold_colour, o.gold_type);
            } else {
                turn.user_utterance = rng.pick(templates::no_reference()).render("", "");
            }

            if (!turn.system_mentioned.empty()) {
                std::vector<std::string> parts;
                for (int id : turn.system_mentioned) {
                    const auto& o = obj_of(id);
                    parts.push_back("the " + o.gold_colour + " " + o.gold_type);
                }
                turn.system_utterance = "we have " + join(parts, " and ") + " .";
            } else {
                turn.system_utterance = rng.pick(templates::system_fillers());
            }
            dia.turns.push_back(std::move(turn));
        }

        corpus.scenes.emplace(scene.scene_id, std::move(scene));
        corpus.dialogues.push_back(std::move(dia));
    }
    corpus.sort_dialogues();
    return corpus;
}

}  // namespace sitdial
