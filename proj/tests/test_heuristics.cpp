#include <catch2/catch_amalgamated.hpp>

#include "sitdial/heuristics.hpp"
#include "sitdial/synth.hpp"

using namespace sitdial;

namespace {

// Corpus where every turn's gold equals the previous turn's mentions.
Corpus oracle_corpus() {
    Corpus c;
    Scene s;
    s.scene_id = "S";
    for (int i = 0; i < 6; ++i) {
        SceneObject o;
        o.object_index = i;
        o.prefab_id = "p" + std::to_string(i);
        o.bbox = {0, 0, 1, 1};
        o.gold_colour = "red";
        o.gold_type = "jacket";
        s.objects.push_back(o);
    }
    c.scenes.emplace("S", s);
    Dialogue d;
    d.dialogue_id = "D";
    d.scene_id = "S";
    for (int i = 0; i < 5; ++i) {
        Turn t;
        t.turn_index = i;
        t.system_mentioned = {i + 1};
        if (i > 0) t.coref_targets = std::vector<int>{i};  // = mentions at t-1
        d.turns.push_back(t);
    }
    c.dialogues.push_back(d);
    return c;
}

}  // namespace

TEST_CASE("previous objects baseline from the worked sequence") {
    Dialogue d;
    d.dialogue_id = "D";
    d.scene_id = "S";
    Turn t0;
    t0.turn_index = 0;
    t0.system_mentioned = {60, 56};
    Turn t1;
    t1.turn_index = 1;
    t1.coref_targets = std::vector<int>{56};
    d.turns = {t0, t1};

    Rng rng(1);
    BaselineKind prev = BaselineKind::parse("previous_objects");
    auto pred = predict_coref(prev, d, 1, rng);
    CHECK(pred == std::vector<int>{60, 56});
    EvalReport r = object_f1({pred}, {{56}});
    CHECK(r.precision == 0.5);
    CHECK(r.recall == 1.0);

    SECTION("empty at turn zero") { CHECK(predict_coref(prev, d, 0, rng).empty()); }
}

TEST_CASE("all previous objects deduplicates across turns") {
    Dialogue d;
    d.dialogue_id = "D";
    d.scene_id = "S";
    for (int i = 0; i < 3; ++i) {
        Turn t;
        t.turn_index = i;
        d.turns.push_back(t);
    }
    d.turns[0].system_mentioned = {1, 2};
    d.turns[1].system_mentioned = {2, 3};
    Rng rng(1);
    auto pred = predict_coref(BaselineKind::parse("all_previous_objects"), d, 2, rng);
    CHECK(pred == std::vector<int>{1, 2, 3});
}

TEST_CASE("random below k emits one id in range, scene-unconditioned") {
    Dialogue d;
    d.dialogue_id = "D";
    d.scene_id = "S";
    Turn t;
    t.turn_index = 0;
    d.turns.push_back(t);
    BaselineKind rnd = BaselineKind::parse("random_below_k", 5);
    Rng rng(42);
    for (int i = 0; i < 200; ++i) {
        auto pred = predict_coref(rnd, d, 0, rng);
        REQUIRE(pred.size() == 1);
        CHECK(pred[0] >= 0);
        CHECK(pred[0] < 5);
    }
    CHECK_THROWS_AS(BaselineKind::parse("random_below_k", 0), Error);
}

TEST_CASE("previous objects achieves F1 = 1 on the constructed oracle corpus") {
    Corpus c = oracle_corpus();
    EvalReport r = run_coref_baseline(BaselineKind::parse("previous_objects"), c, 7);
    CHECK(r.f1 == 1.0);
}

TEST_CASE("random baseline F1 decreases as k grows") {
    CorpusSpec spec;
    spec.n_dialogues = 150;
    spec.seed = 21;
    Corpus c = generate(spec);
    auto mean_f1 = [&](int k) {
        double total = 0.0;
        for (std::uint64_t s = 0; s < 10; ++s)
            total += run_coref_baseline(BaselineKind{BaselineKind::random_below_k, k}, c, 100 + s).f1;
        return total / 10.0;
    };
    double f5 = mean_f1(5);
    double f50 = mean_f1(50);
    double f141 = mean_f1(141);
    CHECK(f5 > f50);
    CHECK(f50 > f141);
}

TEST_CASE("baseline predictions are deterministic per seed") {
    CorpusSpec spec;
    spec.n_dialogues = 40;
    spec.seed = 33;
    Corpus c = generate(spec);
    BaselineKind rnd = BaselineKind::parse("random_below_k", 141);
    CHECK(run_coref_baseline(rnd, c, 5).f1 == run_coref_baseline(rnd, c, 5).f1);
    CHECK(run_coref_baseline(BaselineKind::parse("previous_objects"), c, 1).f1 ==
          run_coref_baseline(BaselineKind::parse("previous_objects"), c, 2).f1);
}

TEST_CASE("disambiguation baselines") {
    CorpusSpec spec;
    spec.n_dialogues = 300;
    spec.seed = 77;
    Corpus c = generate(spec);

    SECTION("majority predicts false everywhere") {
        double acc = run_disambiguation_baseline(BaselineKind::parse("majority_disambiguation"), c, 1);
        StatsReport st = corpus_stats(c);
        CHECK(acc == Catch::Approx(st.disamb_false_rate));
    }
    SECTION("majority on an all-true corpus scores zero") {
        Corpus all_true = c;
        for (auto& d : all_true.dialogues)
            for (auto& t : d.turns)
                if (t.disambiguation_label) t.disambiguation_label = true;
        CHECK(run_disambiguation_baseline(BaselineKind::parse("majority_disambiguation"), all_true,
                                          1) == 0.0);
    }
    SECTION("random lands near one half over seeds") {
        double total = 0.0;
        for (std::uint64_t s = 0; s < 10; ++s)
            total +=
                run_disambiguation_baseline(BaselineKind::parse("random_disambiguation"), c, 500 + s);
        CHECK(total / 10.0 == Catch::Approx(0.5).margin(0.015));
    }
}
