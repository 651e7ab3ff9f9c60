#include <catch2/catch_amalgamated.hpp>

#include <map>

#include "sitdial/stats.hpp"
#include "sitdial/synth.hpp"
#include "sitdial/text.hpp"

using namespace sitdial;

TEST_CASE("empty spec produces an empty corpus") {
    CorpusSpec spec;
    spec.n_dialogues = 0;
    Corpus c = generate(spec);
    CHECK(c.dialogues.empty());
    CHECK(c.scenes.empty());
}

TEST_CASE("same seed gives a bit-identical corpus, different seeds differ") {
    CorpusSpec spec;
    spec.n_dialogues = 25;
    spec.seed = 7;
    std::string a = corpus_to_string(generate(spec));
    std::string b = corpus_to_string(generate(spec));
    CHECK(a == b);
    spec.seed = 8;
    CHECK(corpus_to_string(generate(spec)) != a);
}

TEST_CASE("generated corpora satisfy the data-model invariants") {
    CorpusSpec spec;
    spec.n_dialogues = 60;
    spec.seed = 3;
    Corpus c = generate(spec);
    CHECK_NOTHROW(validate(c));

    SECTION("classes come from the attested table") {
        for (const auto& [sid, scene] : c.scenes) {
            for (const auto& o : scene.objects) {
                CHECK(is_canonical_colour(o.gold_colour));
                CHECK(is_canonical_type(o.gold_type));
                REQUIRE(o.pred_colour.has_value());
                REQUIRE(o.pred_type.has_value());
            }
        }
    }

    SECTION("every disambiguate-true turn has a constructible ambiguity") {
        for (const auto& d : c.dialogues) {
            const Scene& scene = c.scene_of(d);
            std::map<std::string, int> counts;
            for (const auto& o : scene.objects) ++counts[o.gold_type];
            for (const auto& t : d.turns) {
                if (!(t.disambiguation_label && *t.disambiguation_label)) continue;
                REQUIRE(t.coref_targets.has_value());
                REQUIRE_FALSE(t.coref_targets->empty());
                const SceneObject* target = scene.find(t.coref_targets->front());
                REQUIRE(target != nullptr);
                CHECK(counts[target->gold_type] >= 2);
            }
        }
    }

    SECTION("templates render their fillers into the utterance") {
        for (const auto& d : c.dialogues) {
            const Scene& scene = c.scene_of(d);
            for (const auto& t : d.turns) {
                CHECK_FALSE(t.user_utterance.empty());
                if (t.disambiguation_label && !*t.disambiguation_label && t.coref_targets &&
                    t.coref_targets->size() == 1) {
                    const SceneObject* o = scene.find(t.coref_targets->front());
                    CHECK(t.user_utterance.find(o->gold_type) != std::string::npos);
                    CHECK(t.user_utterance.find(o->gold_colour) != std::string::npos);
                }
            }
        }
    }
}

TEST_CASE("calibration targets are hit on a default-sized corpus") {
    CorpusSpec spec;  // defaults: 800 dialogues, the reported dataset stats
    spec.seed = 12345;
    Corpus c = generate(spec);
    StatsReport r = corpus_stats(c);

    CHECK(r.scene_size_mean == Catch::Approx(27.6).margin(1.0));
    CHECK(r.scene_size_max <= 141);
    CHECK(r.frac_targets_below_10 == Catch::Approx(0.525).margin(0.02));
    CHECK(r.frac_targets_below_5 == Catch::Approx(0.301).margin(0.02));
    CHECK(r.disamb_true_rate == Catch::Approx(0.494).margin(0.005));
    CHECK(r.target_in_history_rate == Catch::Approx(0.37).margin(0.02));

    SECTION("disambiguate-true turns read shorter than false turns") {
        double sum_true = 0, n_true = 0, sum_false = 0, n_false = 0;
        for (const auto& d : c.dialogues) {
            for (const auto& t : d.turns) {
                if (!t.disambiguation_label) continue;
                double len = double(word_tokenize(t.user_utterance).size());
                if (*t.disambiguation_label) {
                    sum_true += len;
                    ++n_true;
                } else {
                    sum_false += len;
                    ++n_false;
                }
            }
        }
        CHECK(sum_true / n_true < sum_false / n_false);
    }
}

TEST_CASE("roi noise calibration") {
    CorpusSpec spec;
    SECTION("target cosine of one means zero noise") {
        spec.roi_same_class_cos_mean = 1.0;
        CHECK(calibrate_roi_noise(spec) == 0.0);
    }
    SECTION("unreachable target is rejected") {
        spec.roi_same_class_cos_mean = 0.0;
        CHECK_THROWS_AS(calibrate_roi_noise(spec), InfeasibleSpec);
    }
    SECTION("audit over a generated corpus lands on the target") {
        CorpusSpec s2;
        s2.n_dialogues = 250;
        s2.seed = 555;
        Corpus c = generate(s2);
        RoiAudit audit = roi_similarity_audit(c);
        CHECK(audit.mean == Catch::Approx(0.62).margin(0.05));
        CHECK(audit.sd == Catch::Approx(0.14).margin(0.05));
        CHECK(audit.n_pairs > 10000);
    }
}

TEST_CASE("infeasible specs are rejected") {
    CorpusSpec spec;
    SECTION("below_5 above below_10") {
        spec.target_id_frac_below_5 = 0.6;
        spec.target_id_frac_below_10 = 0.5;
        CHECK_THROWS_AS(generate(spec), InfeasibleSpec);
    }
    SECTION("probability out of range") {
        spec.disamb_true_rate = 1.2;
        CHECK_THROWS_AS(generate(spec), InfeasibleSpec);
    }
    SECTION("scene size cap") {
        spec.scene_size_max = 200;
        CHECK_THROWS_AS(generate(spec), InfeasibleSpec);
    }
}

TEST_CASE("statistics stay inside bands across seeds") {
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        CorpusSpec spec;
        spec.n_dialogues = 400;
        spec.seed = seed;
        StatsReport r = corpus_stats(generate(spec));
        CHECK(r.frac_targets_below_10 == Catch::Approx(0.525).margin(0.02));
        CHECK(r.frac_targets_below_5 == Catch::Approx(0.301).margin(0.02));
        CHECK(r.disamb_true_rate == Catch::Approx(0.494).margin(0.01));
        CHECK(r.target_in_history_rate == Catch::Approx(0.37).margin(0.02));
        CHECK(r.scene_size_mean == Catch::Approx(27.6).margin(1.0));
    }
}
