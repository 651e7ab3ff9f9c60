#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <iterator>

#include "sitdial/common.hpp"
#include "sitdial/metrics.hpp"

using namespace sitdial;

namespace {

// Independent multiset counter: sort + std::set_intersection, a different
// code path from the map-based implementation under test.
void brute_counts(std::vector<int> p, std::vector<int> g, std::size_t& tp, std::size_t& fp,
                  std::size_t& fn) {
    std::sort(p.begin(), p.end());
    std::sort(g.begin(), g.end());
    std::vector<int> inter;
    std::set_intersection(p.begin(), p.end(), g.begin(), g.end(), std::back_inserter(inter));
    tp += inter.size();
    fp += p.size() - inter.size();
    fn += g.size() - inter.size();
}

double brute_f1(const std::vector<std::vector<int>>& preds,
                const std::vector<std::vector<int>>& golds) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < golds.size(); ++i) brute_counts(preds[i], golds[i], tp, fp, fn);
    std::size_t denom = 2 * tp + fp + fn;
    return denom ? 2.0 * double(tp) / double(denom) : 1.0;
}

}  // namespace

TEST_CASE("object F1 basics") {
    CHECK(object_f1({{1, 2}}, {{1, 2}}).f1 == 1.0);

    EvalReport r = object_f1({{2, 3}}, {{1, 2}});
    CHECK(r.tp == 1);
    CHECK(r.fp == 1);
    CHECK(r.fn == 1);
    CHECK(r.f1 == 0.5);

    SECTION("duplicate gold targets penalize set-only predictions") {
        std::size_t tp = 0, fp = 0, fn = 0;
        brute_counts({7}, {7, 7}, tp, fp, fn);
        REQUIRE(tp == 1);
        REQUIRE(fp == 0);
        REQUIRE(fn == 1);
        EvalReport dup = object_f1({{7}}, {{7, 7}});
        CHECK(dup.tp == tp);
        CHECK(dup.fp == fp);
        CHECK(dup.fn == fn);
    }

    SECTION("empty vs empty is perfect by convention") {
        EvalReport e = object_f1({{}}, {{}});
        CHECK(e.f1 == 1.0);
        CHECK(e.precision == 1.0);
        CHECK(e.recall == 1.0);
    }

    CHECK_THROWS_AS(object_f1({{1}}, {}), LengthMismatch);
}

TEST_CASE("object F1 equals the brute-force multiset oracle on 1000 random cases") {
    Rng rng(20240907);
    for (int trial = 0; trial < 1000; ++trial) {
        std::size_t n_turns = std::size_t(rng.uniform_int(1, 8));
        std::vector<std::vector<int>> preds(n_turns), golds(n_turns);
        for (std::size_t i = 0; i < n_turns; ++i) {
            int np = int(rng.uniform_int(0, 5)), ng = int(rng.uniform_int(0, 5));
            for (int j = 0; j < np; ++j) preds[i].push_back(int(rng.uniform_int(0, 9)));
            for (int j = 0; j < ng; ++j) golds[i].push_back(int(rng.uniform_int(0, 9)));
        }
        EvalReport r = object_f1(preds, golds);
        CHECK(r.f1 == brute_f1(preds, golds));
    }
}

TEST_CASE("object F1 invariances") {
    Rng rng(7);
    std::vector<std::vector<int>> preds, golds;
    for (int i = 0; i < 50; ++i) {
        std::vector<int> p, g;
        for (int j = 0, n = int(rng.uniform_int(0, 4)); j < n; ++j)
            p.push_back(int(rng.uniform_int(0, 6)));
        for (int j = 0, n = int(rng.uniform_int(0, 4)); j < n; ++j)
            g.push_back(int(rng.uniform_int(0, 6)));
        preds.push_back(p);
        golds.push_back(g);
    }
    double before = object_f1(preds, golds).f1;

    SECTION("permuting turn order changes nothing") {
        std::vector<std::size_t> perm(preds.size());
        for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
        rng.shuffle(perm);
        std::vector<std::vector<int>> p2, g2;
        for (std::size_t i : perm) {
            p2.push_back(preds[i]);
            g2.push_back(golds[i]);
        }
        CHECK(object_f1(p2, g2).f1 == before);
    }

    SECTION("adding one true positive never decreases F1") {
        // append a fresh turn with a single correct prediction
        preds.push_back({42});
        golds.push_back({42});
        CHECK(object_f1(preds, golds).f1 >= before);
    }
}

TEST_CASE("accuracy") {
    CHECK(accuracy({true, false}, {true, false}) == 1.0);
    CHECK_THROWS_AS(accuracy({}, {}), Empty);
    CHECK_THROWS_AS(accuracy({true}, {true, false}), LengthMismatch);

    SECTION("complemented predictions mirror the score") {
        Rng rng(3);
        std::vector<bool> pred, gold;
        for (int i = 0; i < 200; ++i) {
            pred.push_back(rng.bernoulli(0.5));
            gold.push_back(rng.bernoulli(0.5));
        }
        std::vector<bool> flipped = pred;
        flipped.flip();
        CHECK(accuracy(pred, gold) == Catch::Approx(1.0 - accuracy(flipped, gold)));
    }

    SECTION("random predictor on balanced labels is near one half") {
        Rng rng(11);
        std::vector<bool> gold;
        for (int i = 0; i < 5000; ++i) gold.push_back(i % 2 == 0);
        double total = 0.0;
        for (int s = 0; s < 20; ++s) {
            Rng r(std::uint64_t(s) + 100);
            std::vector<bool> pred;
            for (std::size_t i = 0; i < gold.size(); ++i) pred.push_back(r.bernoulli(0.5));
            total += accuracy(pred, gold);
        }
        CHECK(total / 20.0 == Catch::Approx(0.5).margin(0.01));
    }
}

namespace {

Corpus slice_corpus() {
    Corpus c;
    Scene s;
    s.scene_id = "S";
    for (int i = 0; i < 4; ++i) {
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
    for (int i = 0; i < 4; ++i) {
        Turn t;
        t.turn_index = i;
        t.coref_targets = std::vector<int>{i};
        d.turns.push_back(t);
    }
    d.turns[1].disambiguation_label = true;   // turn 2 is post-clarification
    d.turns[3].disambiguation_label = false;
    c.dialogues.push_back(d);
    return c;
}

}  // namespace

TEST_CASE("slice evaluation") {
    Corpus c = slice_corpus();
    PredictionMap preds;
    preds[{"D", 0}] = {0};
    preds[{"D", 1}] = {2};   // wrong
    preds[{"D", 2}] = {2};   // right, post-clarification
    preds[{"D", 3}] = {3};

    EvalReport r = slice_eval(preds, c);
    CHECK(r.n_turns == 4);
    CHECK(r.slices.at("all_labeled_turns").n_turns == 2);
    CHECK(r.slices.at("disamb_true_turns").n_turns == 1);
    CHECK(r.slices.at("disamb_true_turns").f1 == 0.0);
    CHECK(r.slices.at("disamb_false_turns").f1 == 1.0);
    SECTION("post-clarification slice holds exactly the turn after a true label") {
        CHECK(r.slices.at("post_clarification_turns").n_turns == 1);
        CHECK(r.slices.at("post_clarification_turns").f1 == 1.0);
    }
    SECTION("true/false slices partition the labeled counts") {
        CHECK(r.slices.at("disamb_true_turns").tp + r.slices.at("disamb_false_turns").tp ==
              r.slices.at("all_labeled_turns").tp);
        CHECK(r.slices.at("disamb_true_turns").fn + r.slices.at("disamb_false_turns").fn ==
              r.slices.at("all_labeled_turns").fn);
    }
    SECTION("missing predictions score as empty") {
        PredictionMap none;
        EvalReport r2 = slice_eval(none, c);
        CHECK(r2.tp == 0);
        CHECK(r2.fn == 4);
    }
    SECTION("no labeled turns means undefined slices") {
        Corpus c2 = slice_corpus();
        for (auto& t : c2.dialogues[0].turns) t.disambiguation_label.reset();
        EvalReport r3 = slice_eval(preds, c2);
        CHECK_FALSE(r3.slices.at("all_labeled_turns").defined);
        CHECK(r3.slices.at("all_labeled_turns").n_turns == 0);
    }
}
