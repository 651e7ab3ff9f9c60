#pragma once

// Linguistic-bias analysis and representation audits: lexicon-proxy POS
// profiling, Pearson correlation with a t-distribution significance test
// (incomplete beta via continued fractions), per-label utterance length
// statistics, and the same-description RoI cosine audit.

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "classes.hpp"
#include "common.hpp"
#include "corpus.hpp"
#include "text.hpp"

namespace sitdial {

struct ConstantInput : Error {
    using Error::Error;
};
struct TooFewSamples : Error {
    using Error::Error;
};
struct NoLabeledTurns : Error {
    using Error::Error;
};
struct NoPairs : Error {
    using Error::Error;
};

// ---------------------------------------------------------------------------
// POS proxy

struct PosLexicon {
    std::unordered_set<std::string> prepositions;
    std::unordered_set<std::string> wh_words;
    std::unordered_set<std::string> adjectives;

    static PosLexicon builtin() {
        PosLexicon lex;
        lex.prepositions = {
            "in",     "on",      "of",      "at",      "by",      "to",      "from",  "with",
            "under",  "over",    "near",    "behind",  "beside",  "between", "against", "for",
            "above",  "below",   "inside",  "about",   "across",  "after",   "along", "among",
            "around", "before",  "during",  "into",    "onto",    "through", "toward", "towards",
            "upon",   "within",  "without", "beneath", "off",     "via"};
        lex.wh_words = {"what", "who", "which", "where", "when", "whose"};
        lex.adjectives = {"light", "dark",  "pale",  "bright", "deep",  "small", "large",
                          "big",   "little", "long", "short",  "wide",  "tall",  "high",
                          "low",   "cheap", "nice",  "good",   "great", "new",   "old",
                          "top",   "bottom", "left", "right",  "back",  "front", "middle",
                          "upper", "lower", "other", "wooden", "metal", "striped"};
        for (const auto& c : colour_set()) lex.adjectives.insert(c);
        return lex;
    }

    // Plain-text word list, one token per line; '#' starts a comment.
    static std::unordered_set<std::string> load_list(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw Error("cannot open lexicon file: " + path);
        std::unordered_set<std::string> out;
        std::string line;
        while (std::getline(in, line)) {
            auto words = split_ws(line);
            if (!words.empty() && words[0][0] != '#') out.insert(to_lower(words[0]));
        }
        return out;
    }
};

struct PosProfile {
    std::size_t prepositions = 0;
    std::size_t adjectives = 0;
    std::size_t wh_words = 0;
    std::size_t other = 0;
    std::size_t token_count = 0;
};

inline PosProfile pos_profile(const std::string& utterance, const PosLexicon& lex) {
    PosProfile p;
    for (const std::string& tok : word_tokenize(utterance)) {
        ++p.token_count;
        if (lex.wh_words.count(tok)) {
            ++p.wh_words;
        } else if (lex.prepositions.count(tok)) {
            ++p.prepositions;
        } else if (lex.adjectives.count(tok) ||
                   (tok.size() > 4 && (tok.ends_with("ish") || tok.ends_with("ous") ||
                                       tok.ends_with("ful") || tok.ends_with("less") ||
                                       tok.ends_with("able")))) {
            ++p.adjectives;
        } else {
            ++p.other;
        }
    }
    return p;
}

// ---------------------------------------------------------------------------
// Pearson correlation + significance

namespace detail {

// Continued-fraction evaluation of the regularized incomplete beta
// function, modified Lentz scheme.
inline double betacf(double a, double b, double x) {
    const double kFpMin = 1e-300;
    const double kEps = 1e-12;
    const int kMaxIter = 2000;
    double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) return h;
    }
    throw Error("betacf: no convergence (a,b too large?)");
}

inline double incomplete_beta(double a, double b, double x) {
    if (x < 0.0 || x > 1.0) throw Error("incomplete_beta: x outside [0,1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    double lbeta = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
    double front = std::exp(lbeta + a * std::log(x) + b * std::log(1.0 - x));
    if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
    return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

}  // namespace detail

// Two-sided P(|T| > t) for Student's t with nu degrees of freedom.
inline double t_two_tailed_p(double t, double nu) {
    if (std::isnan(t)) return 1.0;
    return detail::incomplete_beta(nu / 2.0, 0.5, nu / (nu + t * t));
}

struct CorrelationResult {
    double r = 0.0;
    double p_value = 1.0;
    std::size_t n = 0;
};

inline CorrelationResult pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw Error("pearson: length mismatch");
    std::size_t n = x.size();
    if (n < 3) throw TooFewSamples("pearson: need n >= 3, got " + std::to_string(n));
    double mx = mean_of(x), my = mean_of(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) throw ConstantInput("pearson: constant input vector");
    CorrelationResult res;
    res.n = n;
    res.r = sxy / std::sqrt(sxx * syy);
    res.r = std::clamp(res.r, -1.0, 1.0);
    if (std::fabs(res.r) >= 1.0) {
        res.p_value = 0.0;
    } else {
        double df = double(n - 2);
        double t = res.r * std::sqrt(df / (1.0 - res.r * res.r));
        res.p_value = t_two_tailed_p(t, df);
    }
    return res;
}

// ---------------------------------------------------------------------------
// Disambiguation bias analysis

struct BiasReport {
    CorrelationResult prepositions_vs_no_disamb;
    CorrelationResult adjectives_vs_no_disamb;
    CorrelationResult wh_vs_disamb;
    double mean_len_disamb = 0.0;
    double sd_len_disamb = 0.0;
    double mean_len_no_disamb = 0.0;
    double sd_len_no_disamb = 0.0;
    std::size_t n_labeled = 0;

    ordered_json to_json() const {
        auto corr = [](const CorrelationResult& c) {
            ordered_json j;
            j["r"] = c.r;
            j["p"] = c.p_value;
            j["n"] = c.n;
            return j;
        };
        ordered_json j;
        j["prepositions_vs_no_disamb"] = corr(prepositions_vs_no_disamb);
        j["adjectives_vs_no_disamb"] = corr(adjectives_vs_no_disamb);
        j["wh_vs_disamb"] = corr(wh_vs_disamb);
        j["mean_len_disamb"] = mean_len_disamb;
        j["sd_len_disamb"] = sd_len_disamb;
        j["mean_len_no_disamb"] = mean_len_no_disamb;
        j["sd_len_no_disamb"] = sd_len_no_disamb;
        j["n_labeled"] = n_labeled;
        return j;
    }
};

// Correlates per-utterance counts for labeled user turns against the
// disambiguation label: prepositions and adjectives against the
// no-disambiguation indicator, wh-words against disambiguation itself.
inline BiasReport analyze_disambiguation_bias(const Corpus& corpus,
                                              const PosLexicon& lex = PosLexicon::builtin()) {
    std::vector<double> preps, adjs, whs, disamb, no_disamb;
    std::vector<double> len_true, len_false;
    for (const auto& d : corpus.dialogues) {
        for (const auto& t : d.turns) {
            if (!t.disambiguation_label) continue;
            PosProfile p = pos_profile(t.user_utterance, lex);
            preps.push_back(double(p.prepositions));
            adjs.push_back(double(p.adjectives));
            whs.push_back(double(p.wh_words));
            bool lab = *t.disambiguation_label;
            disamb.push_back(lab ? 1.0 : 0.0);
            no_disamb.push_back(lab ? 0.0 : 1.0);
            (lab ? len_true : len_false).push_back(double(p.token_count));
        }
    }
    if (disamb.empty()) throw NoLabeledTurns("analyze_disambiguation_bias: no labeled turns");
    BiasReport rep;
    rep.n_labeled = disamb.size();
    rep.prepositions_vs_no_disamb = pearson(preps, no_disamb);
    rep.adjectives_vs_no_disamb = pearson(adjs, no_disamb);
    rep.wh_vs_disamb = pearson(whs, disamb);
    rep.mean_len_disamb = mean_of(len_true);
    rep.sd_len_disamb = stddev_of(len_true);
    rep.mean_len_no_disamb = mean_of(len_false);
    rep.sd_len_no_disamb = stddev_of(len_false);
    return rep;
}

// ---------------------------------------------------------------------------
// RoI similarity audit

struct RoiAudit {
    double mean = 0.0;
    double sd = 0.0;
    std::size_t n_pairs = 0;
};

// Pairwise cosine similarity among objects sharing a (colour, type)
// description, across the whole corpus. Exact over all unordered pairs.
inline RoiAudit roi_similarity_audit(const Corpus& corpus) {
    std::map<std::pair<std::string, std::string>, std::vector<const SceneObject*>> groups;
    for (const auto& [sid, scene] : corpus.scenes)
        for (const auto& o : scene.objects)
            if (!o.roi.empty()) groups[{o.gold_colour, o.gold_type}].push_back(&o);

    double sum = 0.0, sum2 = 0.0;
    std::size_t n = 0;
    for (const auto& [key, objs] : groups) {
        for (std::size_t i = 0; i < objs.size(); ++i) {
            for (std::size_t j = i + 1; j < objs.size(); ++j) {
                double c = cosine_similarity(objs[i]->roi, objs[j]->roi);
                sum += c;
                sum2 += c * c;
                ++n;
            }
        }
    }
    if (n == 0) throw NoPairs("roi_similarity_audit: no same-description pairs with RoI vectors");
    RoiAudit a;
    a.n_pairs = n;
    a.mean = sum / double(n);
    a.sd = std::sqrt(std::max(0.0, sum2 / double(n) - a.mean * a.mean));
    return a;
}

}  // namespace sitdial
