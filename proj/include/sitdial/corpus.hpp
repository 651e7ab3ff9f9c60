#pragma once

// Canonical in-memory data model for scenes and dialogues, the canonical
// JSON corpus format, structural validation, and corpus-level statistics.
//
// Everything downstream (featurizer, baselines, stats, training) codes
// against this model; both the synthetic generator and the SIMMC adapter
// produce it.

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "common.hpp"

namespace sitdial {

using ordered_json = nlohmann::ordered_json;

struct MalformedRecord : Error {
    using Error::Error;
};
struct MissingScene : Error {
    using Error::Error;
};
struct DanglingObjectId : Error {
    using Error::Error;
};
struct EmptyCorpus : Error {
    using Error::Error;
};

enum class Domain { fashion, furniture };

inline std::string to_string(Domain d) { return d == Domain::fashion ? "fashion" : "furniture"; }
inline Domain domain_from_string(const std::string& s) {
    if (s == "fashion") return Domain::fashion;
    if (s == "furniture") return Domain::furniture;
    throw MalformedRecord("unknown domain: " + s);
}

enum class Split { train, dev, devtest, teststd };

inline std::string to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::dev: return "dev";
        case Split::devtest: return "devtest";
        default: return "teststd";
    }
}
inline Split split_from_string(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "dev") return Split::dev;
    if (s == "devtest") return Split::devtest;
    if (s == "teststd") return Split::teststd;
    throw MalformedRecord("unknown split: " + s);
}

struct SceneObject {
    int object_index = 0;          // canonical object ID, the prediction target space
    std::string prefab_id;         // globally unique asset identifier
    std::array<double, 4> bbox{};  // x, y, width, height in image pixels
    std::string gold_colour;       // stored verbatim; simplification is the featurizer's job
    std::string gold_type;
    std::optional<std::string> pred_colour;  // noisy vision-extractor classes
    std::optional<std::string> pred_type;
    std::vector<double> roi;  // fixed-length region feature vector (may be empty)
};

struct Scene {
    std::string scene_id;
    Domain domain = Domain::fashion;
    double image_w = 1920.0;
    double image_h = 1080.0;
    std::vector<SceneObject> objects;  // scene order is canonical for positional IDs

    const SceneObject* find(int object_index) const {
        for (const auto& o : objects)
            if (o.object_index == object_index) return &o;
        return nullptr;
    }
};

struct Turn {
    int turn_index = 0;
    std::string user_utterance;
    std::string system_utterance;
    std::vector<int> system_mentioned;            // object ids named by the system this turn
    std::optional<bool> disambiguation_label;     // absent on unlabeled turns
    std::optional<std::vector<int>> coref_targets;  // absent = excluded from coref evaluation;
                                                    // present-but-empty = "no references";
                                                    // may contain duplicates (multiset)
};

struct Dialogue {
    std::string dialogue_id;
    std::string scene_id;
    std::vector<Turn> turns;
};

struct Corpus {
    Split split = Split::train;
    std::map<std::string, Scene> scenes;  // ordered: stable serialization
    std::vector<Dialogue> dialogues;      // sorted by dialogue_id after construction

    const Scene& scene_of(const Dialogue& d) const {
        auto it = scenes.find(d.scene_id);
        if (it == scenes.end())
            throw MissingScene("dialogue " + d.dialogue_id + " references missing scene " + d.scene_id);
        return it->second;
    }

    void sort_dialogues() {
        std::sort(dialogues.begin(), dialogues.end(),
                  [](const Dialogue& a, const Dialogue& b) { return a.dialogue_id < b.dialogue_id; });
    }
};

// ---------------------------------------------------------------------------
// Validation

// Checks the structural invariants: unique object indexes, positive box
// extents, strictly increasing turn indexes from 0, and that every mentioned
// or targeted id resolves to exactly one object in the dialogue's scene.
inline void validate(const Corpus& corpus) {
    for (const auto& [sid, scene] : corpus.scenes) {
        if (scene.objects.empty() || scene.objects.size() > 141)
            throw MalformedRecord("scene " + sid + ": object count out of [1,141]");
        std::set<int> seen;
        for (const auto& o : scene.objects) {
            if (o.object_index < 0)
                throw MalformedRecord("scene " + sid + ": negative object_index");
            if (!seen.insert(o.object_index).second)
                throw MalformedRecord("scene " + sid + ": duplicate object_index " +
                                      std::to_string(o.object_index));
            if (!(o.bbox[2] > 0.0) || !(o.bbox[3] > 0.0))
                throw MalformedRecord("scene " + sid + ": non-positive bbox extent");
        }
    }
    for (const auto& d : corpus.dialogues) {
        const Scene& scene = corpus.scene_of(d);
        int expected = 0;
        for (const auto& t : d.turns) {
            if (t.turn_index != expected++)
                throw MalformedRecord("dialogue " + d.dialogue_id + ": turn indexes not 0,1,2,...");
            auto check_id = [&](int id, const char* what) {
                if (!scene.find(id))
                    throw DanglingObjectId("dialogue " + d.dialogue_id + " turn " +
                                           std::to_string(t.turn_index) + ": " + what + " id " +
                                           std::to_string(id) + " not in scene " + d.scene_id);
            };
            for (int id : t.system_mentioned) check_id(id, "system_mentioned");
            if (t.coref_targets)
                for (int id : *t.coref_targets) check_id(id, "coref target");
        }
    }
}

// ---------------------------------------------------------------------------
// Canonical JSON format
//
// One document per split:
//   { "split": ..., "scenes": { id: {...} }, "dialogues": { id: {...} } }
// Keys are emitted in a fixed order; scenes/dialogues sorted by id.
// pred_colour/pred_type are optional and omitted when absent.

inline ordered_json corpus_to_json(const Corpus& corpus) {
    ordered_json root;
    root["split"] = to_string(corpus.split);
    ordered_json scenes = ordered_json::object();
    for (const auto& [sid, scene] : corpus.scenes) {
        ordered_json js;
        js["domain"] = to_string(scene.domain);
        js["image_w"] = scene.image_w;
        js["image_h"] = scene.image_h;
        ordered_json objs = ordered_json::array();
        for (const auto& o : scene.objects) {
            ordered_json jo;
            jo["index"] = o.object_index;
            jo["prefab"] = o.prefab_id;
            jo["bbox"] = {o.bbox[0], o.bbox[1], o.bbox[2], o.bbox[3]};
            jo["colour"] = o.gold_colour;
            jo["type"] = o.gold_type;
            if (o.pred_colour) jo["pred_colour"] = *o.pred_colour;
            if (o.pred_type) jo["pred_type"] = *o.pred_type;
            jo["roi"] = o.roi;
            objs.push_back(std::move(jo));
        }
        js["objects"] = std::move(objs);
        scenes[sid] = std::move(js);
    }
    root["scenes"] = std::move(scenes);
    ordered_json dials = ordered_json::object();
    for (const auto& d : corpus.dialogues) {
        ordered_json jd;
        jd["scene_id"] = d.scene_id;
        ordered_json turns = ordered_json::array();
        for (const auto& t : d.turns) {
            ordered_json jt;
            jt["user"] = t.user_utterance;
            jt["system"] = t.system_utterance;
            jt["system_mentioned"] = t.system_mentioned;
            jt["disambiguate"] = t.disambiguation_label ? ordered_json(*t.disambiguation_label)
                                                        : ordered_json(nullptr);
            jt["targets"] = t.coref_targets ? ordered_json(*t.coref_targets) : ordered_json(nullptr);
            turns.push_back(std::move(jt));
        }
        jd["turns"] = std::move(turns);
        dials[d.dialogue_id] = std::move(jd);
    }
    root["dialogues"] = std::move(dials);
    return root;
}

inline Corpus corpus_from_json(const ordered_json& root) {
    Corpus corpus;
    try {
        corpus.split = split_from_string(root.at("split").get<std::string>());
        for (const auto& [sid, js] : root.at("scenes").items()) {
            Scene scene;
            scene.scene_id = sid;
            scene.domain = domain_from_string(js.at("domain").get<std::string>());
            scene.image_w = js.value("image_w", 1920.0);
            scene.image_h = js.value("image_h", 1080.0);
            for (const auto& jo : js.at("objects")) {
                SceneObject o;
                o.object_index = jo.at("index").get<int>();
                o.prefab_id = jo.at("prefab").get<std::string>();
                auto bb = jo.at("bbox");
                if (bb.size() != 4) throw MalformedRecord("scene " + sid + ": bbox must have 4 entries");
                for (int i = 0; i < 4; ++i) o.bbox[std::size_t(i)] = bb[std::size_t(i)].get<double>();
                o.gold_colour = jo.at("colour").get<std::string>();
                o.gold_type = jo.at("type").get<std::string>();
                if (jo.contains("pred_colour") && !jo["pred_colour"].is_null())
                    o.pred_colour = jo["pred_colour"].get<std::string>();
                if (jo.contains("pred_type") && !jo["pred_type"].is_null())
                    o.pred_type = jo["pred_type"].get<std::string>();
                if (jo.contains("roi")) o.roi = jo["roi"].get<std::vector<double>>();
                scene.objects.push_back(std::move(o));
            }
            corpus.scenes.emplace(sid, std::move(scene));
        }
        for (const auto& [did, jd] : root.at("dialogues").items()) {
            Dialogue d;
            d.dialogue_id = did;
            d.scene_id = jd.at("scene_id").get<std::string>();
            int idx = 0;
            for (const auto& jt : jd.at("turns")) {
                Turn t;
                t.turn_index = idx++;
                t.user_utterance = jt.at("user").get<std::string>();
                t.system_utterance = jt.at("system").get<std::string>();
                t.system_mentioned = jt.at("system_mentioned").get<std::vector<int>>();
                if (!jt.at("disambiguate").is_null())
                    t.disambiguation_label = jt["disambiguate"].get<bool>();
                if (!jt.at("targets").is_null())
                    t.coref_targets = jt["targets"].get<std::vector<int>>();
                d.turns.push_back(std::move(t));
            }
            corpus.dialogues.push_back(std::move(d));
        }
    } catch (const nlohmann::json::exception& e) {
        throw MalformedRecord(std::string("canonical corpus parse error: ") + e.what());
    }
    corpus.sort_dialogues();
    return corpus;
}

inline std::string corpus_to_string(const Corpus& corpus) { return corpus_to_json(corpus).dump(1); }

inline void save_corpus(const Corpus& corpus, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open for writing: " + path);
    out << corpus_to_string(corpus);
    out << "\n";
}

inline Corpus load_corpus(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open corpus file: " + path);
    ordered_json root;
    try {
        in >> root;
    } catch (const nlohmann::json::exception& e) {
        throw MalformedRecord("corpus file " + path + ": " + e.what());
    }
    return corpus_from_json(root);
}

// ---------------------------------------------------------------------------
// Corpus statistics

struct StatsReport {
    std::size_t n_scenes = 0;
    std::size_t n_dialogues = 0;
    std::size_t n_turns = 0;
    std::size_t n_labeled_turns = 0;
    std::size_t n_target_turns = 0;     // turns with a non-empty target multiset
    std::size_t n_target_instances = 0;  // counting duplicates
    double scene_size_mean = 0.0;
    double scene_size_sd = 0.0;
    std::size_t scene_size_max = 0;
    double frac_targets_below_10 = 0.0;
    double frac_targets_below_5 = 0.0;
    double disamb_true_rate = 0.0;   // among labeled turns
    double disamb_false_rate = 0.0;
    double target_in_history_rate = 0.0;  // among non-empty-target turns

    ordered_json to_json() const {
        ordered_json j;
        j["n_scenes"] = n_scenes;
        j["n_dialogues"] = n_dialogues;
        j["n_turns"] = n_turns;
        j["n_labeled_turns"] = n_labeled_turns;
        j["n_target_turns"] = n_target_turns;
        j["n_target_instances"] = n_target_instances;
        j["scene_size_mean"] = scene_size_mean;
        j["scene_size_sd"] = scene_size_sd;
        j["scene_size_max"] = scene_size_max;
        j["frac_targets_below_10"] = frac_targets_below_10;
        j["frac_targets_below_5"] = frac_targets_below_5;
        j["disamb_true_rate"] = disamb_true_rate;
        j["disamb_false_rate"] = disamb_false_rate;
        j["target_in_history_rate"] = target_in_history_rate;
        return j;
    }
};

inline StatsReport corpus_stats(const Corpus& corpus) {
    if (corpus.scenes.empty() || corpus.dialogues.empty())
        throw EmptyCorpus("corpus_stats: empty corpus");
    StatsReport r;
    r.n_scenes = corpus.scenes.size();
    r.n_dialogues = corpus.dialogues.size();
    std::vector<double> sizes;
    for (const auto& [sid, scene] : corpus.scenes) {
        sizes.push_back(double(scene.objects.size()));
        r.scene_size_max = std::max(r.scene_size_max, scene.objects.size());
    }
    r.scene_size_mean = mean_of(sizes);
    r.scene_size_sd = stddev_of(sizes);

    std::size_t n_true = 0;
    std::size_t below10 = 0, below5 = 0;
    std::size_t in_history = 0;
    for (const auto& d : corpus.dialogues) {
        std::unordered_set<int> mentioned_so_far;
        for (const auto& t : d.turns) {
            ++r.n_turns;
            if (t.disambiguation_label) {
                ++r.n_labeled_turns;
                if (*t.disambiguation_label) ++n_true;
            }
            if (t.coref_targets && !t.coref_targets->empty()) {
                ++r.n_target_turns;
                bool hit = false;
                for (int id : *t.coref_targets) {
                    ++r.n_target_instances;
                    if (id < 10) ++below10;
                    if (id < 5) ++below5;
                    if (mentioned_so_far.count(id)) hit = true;
                }
                if (hit) ++in_history;
            }
            for (int id : t.system_mentioned) mentioned_so_far.insert(id);
        }
    }
    if (r.n_target_instances > 0) {
        r.frac_targets_below_10 = double(below10) / double(r.n_target_instances);
        r.frac_targets_below_5 = double(below5) / double(r.n_target_instances);
    }
    if (r.n_labeled_turns > 0) {
        r.disamb_true_rate = double(n_true) / double(r.n_labeled_turns);
        r.disamb_false_rate = 1.0 - r.disamb_true_rate;
    }
    if (r.n_target_turns > 0) r.target_in_history_rate = double(in_history) / double(r.n_target_turns);
    return r;
}

}  // namespace sitdial
