#pragma once

// Turns corpus records into model-ready sequences: colour simplification,
// per-object textual descriptions with per-type positional IDs, candidate
// language sequences, the flattened dialogue for the disambiguation task,
// vocabulary construction + tokenization, visual feature packing, and the
// ablation mask flags.

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "classes.hpp"
#include "common.hpp"
#include "corpus.hpp"
#include "text.hpp"

namespace sitdial {

struct MissingPredictedClass : Error {
    using Error::Error;
};
struct SceneTooLarge : Error {
    using Error::Error;
};
struct TurnOutOfRange : Error {
    using Error::Error;
};

// history_object_turns value meaning "all previous turns"
inline constexpr int kAllHistory = -1;

struct FeaturizerConfig {
    int history_object_turns = 1;  // x in O_{t-x}; 0 = no object history; kAllHistory = O_{0..t-1}
    bool use_descriptions = true;
    bool use_colours = true;
    bool use_types = true;
    bool use_ids_in_descriptions = true;
    bool use_global_tokens = false;
    bool oracle_descriptions = false;
    bool use_prev_system_turn = true;
    bool use_user_utterance = true;
    bool use_roi = true;
    bool use_bbox = true;
    bool use_position_counts = true;
    std::size_t max_objects = 60;  // training-time scene filter
    bool training_mode = false;

    void validate() const {
        if (use_global_tokens && use_ids_in_descriptions)
            throw Error("FeaturizerConfig: use_global_tokens replaces object ids; "
                        "use_ids_in_descriptions must be off");
        if (history_object_turns < kAllHistory)
            throw Error("FeaturizerConfig: bad history_object_turns");
    }

    ordered_json to_json() const {
        ordered_json j;
        j["history_object_turns"] = history_object_turns;
        j["use_descriptions"] = use_descriptions;
        j["use_colours"] = use_colours;
        j["use_types"] = use_types;
        j["use_ids_in_descriptions"] = use_ids_in_descriptions;
        j["use_global_tokens"] = use_global_tokens;
        j["oracle_descriptions"] = oracle_descriptions;
        j["use_prev_system_turn"] = use_prev_system_turn;
        j["use_user_utterance"] = use_user_utterance;
        j["use_roi"] = use_roi;
        j["use_bbox"] = use_bbox;
        j["use_position_counts"] = use_position_counts;
        j["max_objects"] = max_objects;
        j["training_mode"] = training_mode;
        return j;
    }

    static FeaturizerConfig from_json(const ordered_json& j) {
        FeaturizerConfig c;
        c.history_object_turns = j.value("history_object_turns", c.history_object_turns);
        c.use_descriptions = j.value("use_descriptions", c.use_descriptions);
        c.use_colours = j.value("use_colours", c.use_colours);
        c.use_types = j.value("use_types", c.use_types);
        c.use_ids_in_descriptions = j.value("use_ids_in_descriptions", c.use_ids_in_descriptions);
        c.use_global_tokens = j.value("use_global_tokens", c.use_global_tokens);
        c.oracle_descriptions = j.value("oracle_descriptions", c.oracle_descriptions);
        c.use_prev_system_turn = j.value("use_prev_system_turn", c.use_prev_system_turn);
        c.use_user_utterance = j.value("use_user_utterance", c.use_user_utterance);
        c.use_roi = j.value("use_roi", c.use_roi);
        c.use_bbox = j.value("use_bbox", c.use_bbox);
        c.use_position_counts = j.value("use_position_counts", c.use_position_counts);
        c.max_objects = j.value("max_objects", c.max_objects);
        c.training_mode = j.value("training_mode", c.training_mode);
        return c;
    }
};

// ---------------------------------------------------------------------------
// Colour simplification

// Strips modifier prefixes and maps onto the 17-colour canonical table.
// Total: anything unmapped becomes "unknown".
inline std::string simplify_colour(const std::string& raw) {
    std::string s = to_lower(raw);
    static const char* kModifiers[] = {"light", "dark", "pale", "bright", "deep"};
    bool stripped = true;
    while (stripped) {
        stripped = false;
        for (const char* m : kModifiers) {
            std::string pre = std::string(m) + " ";
            if (s.rfind(pre, 0) == 0) {
                s = s.substr(pre.size());
                stripped = true;
            }
        }
    }
    if (is_canonical_colour(s)) return s;
    return "unknown";
}

// ---------------------------------------------------------------------------
// Global object tokens

// Mints one [OBJECT_k] token per distinct prefab id, k assigned by sorted
// prefab order so the mapping is injective and stable across splits.
class GlobalTokenMap {
public:
    GlobalTokenMap() = default;

    static GlobalTokenMap build(const std::vector<const Corpus*>& corpora) {
        std::set<std::string> prefabs;
        for (const Corpus* c : corpora)
            for (const auto& [sid, scene] : c->scenes)
                for (const auto& o : scene.objects) prefabs.insert(o.prefab_id);
        GlobalTokenMap m;
        int k = 0;
        for (const auto& p : prefabs) m.map_[p] = k++;
        return m;
    }

    std::string token_for(const std::string& prefab) const {
        auto it = map_.find(prefab);
        if (it == map_.end()) throw Error("GlobalTokenMap: unknown prefab " + prefab);
        return "[OBJECT_" + std::to_string(it->second) + "]";
    }

    std::size_t size() const { return map_.size(); }
    const std::map<std::string, int>& mapping() const { return map_; }

private:
    std::map<std::string, int> map_;
};

// ---------------------------------------------------------------------------
// Object descriptions

struct ObjectDescription {
    std::optional<std::string> object_index_token;
    std::string colour_token;              // empty when colours masked
    std::vector<std::string> type_tokens;  // empty when types masked
    int positional_id = 1;

    std::vector<std::string> words() const {
        std::vector<std::string> w;
        if (object_index_token) w.push_back(*object_index_token);
        if (!colour_token.empty()) w.push_back(colour_token);
        for (const auto& t : type_tokens) w.push_back(t);
        return w;
    }

    std::string text() const { return join(words(), " "); }
};

inline ObjectDescription build_description(const SceneObject& obj, const FeaturizerConfig& cfg,
                                           int positional_id,
                                           const GlobalTokenMap* global_map = nullptr) {
    cfg.validate();
    ObjectDescription d;
    d.positional_id = positional_id;
    std::string colour, type;
    if (cfg.oracle_descriptions) {
        colour = obj.gold_colour;
        type = obj.gold_type;
    } else {
        if (!obj.pred_colour || !obj.pred_type)
            throw MissingPredictedClass("object " + std::to_string(obj.object_index) +
                                        ": predicted classes required (oracle_descriptions off)");
        colour = *obj.pred_colour;
        type = *obj.pred_type;
    }
    if (cfg.use_global_tokens) {
        if (!global_map) throw Error("build_description: global token map required");
        d.object_index_token = global_map->token_for(obj.prefab_id);
    } else if (cfg.use_ids_in_descriptions) {
        d.object_index_token = std::to_string(obj.object_index);
    }
    if (cfg.use_colours) d.colour_token = simplify_colour(colour);
    if (cfg.use_types)
        for (const auto& w : split_ws(to_lower(type))) d.type_tokens.push_back(w);
    return d;
}

// Per-type positional ids follow scene object order, first of a type = 1.
// The type is the one the descriptions see: predicted unless oracle mode
// (falling back to gold when no prediction exists and none is required).
inline std::vector<int> positional_ids(const Scene& scene, const FeaturizerConfig& cfg) {
    std::map<std::string, int> type_counter;
    std::vector<int> out;
    out.reserve(scene.objects.size());
    for (const auto& o : scene.objects) {
        const std::string& t =
            (!cfg.oracle_descriptions && o.pred_type) ? *o.pred_type : o.gold_type;
        out.push_back(++type_counter[t]);
    }
    return out;
}

inline std::vector<ObjectDescription> describe_scene(const Scene& scene, const FeaturizerConfig& cfg,
                                                     const GlobalTokenMap* global_map = nullptr) {
    std::vector<int> pos = positional_ids(scene, cfg);
    std::vector<ObjectDescription> out;
    out.reserve(scene.objects.size());
    for (std::size_t i = 0; i < scene.objects.size(); ++i)
        out.push_back(build_description(scene.objects[i], cfg, pos[i], global_map));
    return out;
}

// ---------------------------------------------------------------------------
// Vocabulary

class Vocabulary {
public:
    static constexpr int kPad = 0;
    static constexpr int kCls = 1;
    static constexpr int kSep = 2;
    static constexpr int kUnk = 3;

    Vocabulary() { add_specials(); }

    // Built once per corpus from the train split; the id-token block and the
    // [OBJECT_k] block are closed sets known up front.
    static Vocabulary build(const Corpus& train, const GlobalTokenMap* global_map = nullptr) {
        Vocabulary v;
        for (int id = 0; id <= 141; ++id) v.add(std::to_string(id));
        if (global_map)
            for (const auto& [prefab, k] : global_map->mapping())
                v.add("[OBJECT_" + std::to_string(k) + "]");
        std::set<std::string> words;
        auto feed = [&](const std::string& text) {
            for (const auto& tok : word_tokenize(text)) words.insert(tok);
        };
        for (const auto& d : train.dialogues) {
            for (const auto& t : d.turns) {
                feed(t.user_utterance);
                feed(t.system_utterance);
            }
        }
        for (const auto& [sid, scene] : train.scenes) {
            for (const auto& o : scene.objects) {
                feed(simplify_colour(o.gold_colour));
                feed(to_lower(o.gold_type));
                if (o.pred_colour) feed(simplify_colour(*o.pred_colour));
                if (o.pred_type) feed(to_lower(*o.pred_type));
            }
        }
        words.insert(":");
        for (const auto& w : words) v.add(w);
        return v;
    }

    int add(const std::string& token) {
        auto it = index_.find(token);
        if (it != index_.end()) return it->second;
        int id = int(tokens_.size());
        tokens_.push_back(token);
        index_[token] = id;
        return id;
    }

    int id_of(const std::string& token) const {
        auto it = index_.find(token);
        return it == index_.end() ? kUnk : it->second;
    }

    const std::string& token_of(int id) const { return tokens_[std::size_t(id)]; }
    std::size_t size() const { return tokens_.size(); }

    void save(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw Error("cannot write vocabulary: " + path);
        for (const auto& t : tokens_) out << t << "\n";
    }

    static Vocabulary load(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw Error("cannot read vocabulary: " + path);
        Vocabulary v;
        v.tokens_.clear();
        v.index_.clear();
        std::string line;
        while (std::getline(in, line))
            if (!line.empty()) v.add(line);
        return v;
    }

private:
    void add_specials() {
        for (const char* s : {"[PAD]", "[CLS]", "[SEP]", "[UNK]", "[SYS]", "[USR]", "SYSTEM", "USER"})
            add(s);
    }

    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> index_;
};

inline std::vector<int> tokenize(const std::string& text, const Vocabulary& vocab) {
    std::vector<int> out;
    for (const auto& tok : word_tokenize(text)) out.push_back(vocab.id_of(tok));
    return out;
}

inline std::string detokenize(const std::vector<int>& ids, const Vocabulary& vocab) {
    std::vector<std::string> toks;
    toks.reserve(ids.size());
    for (int id : ids) toks.push_back(vocab.token_of(id));
    return join(toks, " ");
}

// ---------------------------------------------------------------------------
// Candidate sequence assembly

struct CandidateEncoding {
    std::vector<int> token_ids;    // [CLS] context [SEP]* d_n
    std::vector<int> segment_ids;  // 0 = context (through the last [SEP]), 1 = d_n
    std::array<double, 4> bbox{};  // normalized to [0,1] by image extent (zeroed when masked)
    std::vector<double> roi;       // zeroed when masked
    int positional_id = 1;         // per-type counter (1 when masked)
    int object_index = 0;
};

struct EncodedExample {
    std::string dialogue_id;
    int turn_index = 0;
    std::vector<CandidateEncoding> candidates;
    std::vector<double> labels;  // y_n = 1 iff object n in coref_targets (set-collapsed)
    std::vector<double> mask;    // 1 = real candidate, 0 = padding
    bool has_labels = false;
};

// Previously mentioned object ids for O_{t-x}: duplicate-free, order
// preserving, in turn order.
inline std::vector<int> object_history(const Dialogue& dialogue, int t, int history_turns) {
    std::vector<int> out;
    if (history_turns == 0) return out;
    int start = (history_turns == kAllHistory) ? 0 : std::max(0, t - history_turns);
    std::set<int> seen;
    for (int j = start; j < t; ++j) {
        for (int id : dialogue.turns[std::size_t(j)].system_mentioned) {
            if (seen.insert(id).second) out.push_back(id);
        }
    }
    return out;
}

// The language string for one candidate:
//   SYSTEM : <S_{t-1}> [SEP] <O_{t-x}> [SEP] USER : <U_t> [SEP] <d_n>
// with segments dropped per the mask flags and empty segments omitted.
inline std::string assemble_language_string(const Dialogue& dialogue, int t, const Scene& scene,
                                            const FeaturizerConfig& cfg,
                                            const ObjectDescription& desc,
                                            const GlobalTokenMap* global_map = nullptr) {
    std::vector<std::string> parts;
    if (cfg.use_prev_system_turn && t > 0) {
        const std::string& prev = dialogue.turns[std::size_t(t) - 1].system_utterance;
        if (!prev.empty()) parts.push_back("SYSTEM : " + prev);
    }
    std::vector<int> hist = object_history(dialogue, t, cfg.history_object_turns);
    if (!hist.empty()) {
        std::vector<std::string> toks;
        for (int id : hist) {
            if (cfg.use_global_tokens) {
                const SceneObject* o = scene.find(id);
                if (!o) throw DanglingObjectId("object history id " + std::to_string(id));
                toks.push_back(global_map->token_for(o->prefab_id));
            } else {
                toks.push_back(std::to_string(id));
            }
        }
        parts.push_back(join(toks, " "));
    }
    if (cfg.use_user_utterance) parts.push_back("USER : " + dialogue.turns[std::size_t(t)].user_utterance);
    std::string context = join(parts, " [SEP] ");
    if (cfg.use_descriptions) {
        std::string d = desc.text();
        if (!d.empty()) return context.empty() ? d : context + " [SEP] " + d;
    }
    return context;
}

inline EncodedExample assemble_sequence(const Dialogue& dialogue, int t, const Scene& scene,
                                        const FeaturizerConfig& cfg, const Vocabulary& vocab,
                                        const GlobalTokenMap* global_map = nullptr) {
    cfg.validate();
    if (t < 0 || std::size_t(t) >= dialogue.turns.size())
        throw TurnOutOfRange("assemble_sequence: turn " + std::to_string(t));
    if (cfg.training_mode && scene.objects.size() > cfg.max_objects)
        throw SceneTooLarge("scene " + scene.scene_id + " has " +
                            std::to_string(scene.objects.size()) + " objects (cap " +
                            std::to_string(cfg.max_objects) + ")");
    const Turn& turn = dialogue.turns[std::size_t(t)];

    std::vector<int> pos = positional_ids(scene, cfg);
    std::vector<ObjectDescription> descs;
    if (cfg.use_descriptions) {
        descs = describe_scene(scene, cfg, global_map);
    } else {
        descs.resize(scene.objects.size());
        for (std::size_t i = 0; i < descs.size(); ++i) descs[i].positional_id = pos[i];
    }

    EncodedExample ex;
    ex.dialogue_id = dialogue.dialogue_id;
    ex.turn_index = t;
    ex.has_labels = turn.coref_targets.has_value();
    std::set<int> target_set;
    if (turn.coref_targets) target_set.insert(turn.coref_targets->begin(), turn.coref_targets->end());

    for (std::size_t n = 0; n < scene.objects.size(); ++n) {
        const SceneObject& obj = scene.objects[n];
        CandidateEncoding cand;
        cand.object_index = obj.object_index;
        std::string lang = assemble_language_string(dialogue, t, scene, cfg, descs[n], global_map);

        cand.token_ids.push_back(Vocabulary::kCls);
        cand.segment_ids.push_back(0);
        for (int id : tokenize(lang, vocab)) cand.token_ids.push_back(id);
        // segment 1 starts after the last [SEP]
        std::size_t last_sep = 0;
        for (std::size_t i = 0; i < cand.token_ids.size(); ++i)
            if (cand.token_ids[i] == Vocabulary::kSep) last_sep = i;
        cand.segment_ids.resize(cand.token_ids.size(), 0);
        if (last_sep > 0 && cfg.use_descriptions)
            for (std::size_t i = last_sep + 1; i < cand.segment_ids.size(); ++i)
                cand.segment_ids[i] = 1;

        if (cfg.use_bbox) {
            double w = scene.image_w > 0 ? scene.image_w : 1.0;
            double h = scene.image_h > 0 ? scene.image_h : 1.0;
            cand.bbox = {obj.bbox[0] / w, obj.bbox[1] / h, obj.bbox[2] / w, obj.bbox[3] / h};
        }
        if (cfg.use_roi) cand.roi = obj.roi;
        cand.positional_id = cfg.use_position_counts ? descs[n].positional_id : 1;
        ex.candidates.push_back(std::move(cand));
        ex.labels.push_back(target_set.count(obj.object_index) ? 1.0 : 0.0);
        ex.mask.push_back(1.0);
    }
    return ex;
}

// Appends inert padding candidates (mask 0, zero labels).
inline void pad_candidates(EncodedExample& ex, std::size_t total, std::size_t roi_dim) {
    while (ex.candidates.size() < total) {
        CandidateEncoding pad;
        pad.token_ids = {Vocabulary::kCls};
        pad.segment_ids = {0};
        pad.roi.assign(roi_dim, 0.0);
        pad.positional_id = 1;
        pad.object_index = -1;
        ex.candidates.push_back(std::move(pad));
        ex.labels.push_back(0.0);
        ex.mask.push_back(0.0);
    }
}

// ---------------------------------------------------------------------------
// Flattened dialogue for the disambiguation task
//
// [CLS] then one group per included turn j: "[SYS] S_{j-1} [USR] U_j", where
// the [SYS] part is dropped at j=0 (nothing precedes) and in h=0 mode (only
// the current user utterance is used).

inline std::string flatten_string(const Dialogue& dialogue, int t, int history_turns) {
    if (t < 0 || std::size_t(t) >= dialogue.turns.size())
        throw TurnOutOfRange("flatten_dialogue: turn " + std::to_string(t));
    int start = (history_turns == kAllHistory) ? 0 : std::max(0, t - std::max(0, history_turns));
    std::vector<std::string> parts = {"[CLS]"};
    for (int j = start; j <= t; ++j) {
        if (j > 0 && history_turns != 0) {
            const std::string& prev_sys = dialogue.turns[std::size_t(j) - 1].system_utterance;
            parts.push_back("[SYS] " + prev_sys);
        }
        parts.push_back("[USR] " + dialogue.turns[std::size_t(j)].user_utterance);
    }
    return join(parts, " ");
}

inline std::vector<int> flatten_dialogue(const Dialogue& dialogue, int t, int history_turns,
                                         const Vocabulary& vocab) {
    return tokenize(flatten_string(dialogue, t, history_turns), vocab);
}

}  // namespace sitdial
