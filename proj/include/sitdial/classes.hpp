#pragma once

// Closed class inventories for the shop domains: 17 canonical colours,
// 21 object types, and the 169 attested (colour, type) combinations the
// synthetic generator draws from. The combination table is synthetic; it
// mirrors the shape of the real metadata (not every colour occurs with
// every type) without copying it.

#include <array>
#include <string>
#include <vector>

#include "common.hpp"

namespace sitdial {

inline const std::array<std::string, 17>& colour_set() {
    static const std::array<std::string, 17> k = {
        "red",    "blue",  "green",  "yellow", "black",  "white",
        "grey",   "brown", "pink",   "purple", "orange", "beige",
        "olive",  "maroon", "teal",  "golden", "silver"};
    return k;
}

inline const std::array<std::string, 21>& type_set() {
    static const std::array<std::string, 21> k = {
        "jacket",        "blouse hanging", "blouse display", "trousers display",
        "dress",         "coat",           "shirt",          "skirt",
        "suit",          "shoe",           "hat",            "sweater",
        "tshirt",        "jeans",          "hoodie",         "couch",
        "armchair",      "coffee table",   "end table",      "lamp",
        "shelf"};
    return k;
}

inline bool is_canonical_colour(const std::string& c) {
    for (const auto& k : colour_set())
        if (k == c) return true;
    return false;
}

inline bool is_canonical_type(const std::string& t) {
    for (const auto& k : type_set())
        if (k == t) return true;
    return false;
}

// Attested (colour, type) combinations: type i pairs with 8 colours
// (i*3 + k) mod 17, plus one extra on type 0, for exactly 169 entries.
inline const std::vector<std::pair<std::string, std::string>>& attested_combinations() {
    static const std::vector<std::pair<std::string, std::string>> table = [] {
        std::vector<std::pair<std::string, std::string>> v;
        for (std::size_t i = 0; i < type_set().size(); ++i) {
            std::size_t extra = (i == 0) ? 9 : 8;
            for (std::size_t k = 0; k < extra; ++k)
                v.emplace_back(colour_set()[(i * 3 + k) % 17], type_set()[i]);
        }
        return v;
    }();
    return table;
}

inline std::vector<std::string> attested_colours_for(const std::string& type) {
    std::vector<std::string> out;
    for (const auto& [c, t] : attested_combinations())
        if (t == type) out.push_back(c);
    return out;
}

}  // namespace sitdial
