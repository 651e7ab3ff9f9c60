#pragma once

// Word-level tokenization shared by the featurizer and the POS analysis.
//
// Rules: whitespace chunks that exactly match a marker token ([SEP],
// [OBJECT_42], SYSTEM, ...) pass through verbatim; everything else is
// lowercased and split into alphanumeric runs with punctuation kept as
// single-character tokens. A mid-word apostrophe splits before itself,
// so "i'd" becomes "i", "'d".

#include <cctype>
#include <string>
#include <vector>

#include "common.hpp"

namespace sitdial {

inline bool is_marker_token(const std::string& tok) {
    static const char* fixed[] = {"[PAD]", "[CLS]", "[SEP]", "[UNK]", "[SYS]", "[USR]",
                                  "SYSTEM", "USER"};
    for (const char* f : fixed)
        if (tok == f) return true;
    if (tok.size() > 9 && tok.rfind("[OBJECT_", 0) == 0 && tok.back() == ']') {
        for (std::size_t i = 8; i + 1 < tok.size(); ++i)
            if (!std::isdigit(static_cast<unsigned char>(tok[i]))) return false;
        return true;
    }
    return false;
}

inline std::vector<std::string> word_tokenize(const std::string& text) {
    std::vector<std::string> out;
    for (const std::string& chunk : split_ws(text)) {
        if (is_marker_token(chunk)) {
            out.push_back(chunk);
            continue;
        }
        std::string s = to_lower(chunk);
        std::size_t i = 0;
        while (i < s.size()) {
            unsigned char c = static_cast<unsigned char>(s[i]);
            if (std::isalnum(c)) {
                std::size_t j = i;
                while (j < s.size() && std::isalnum(static_cast<unsigned char>(s[j]))) ++j;
                out.push_back(s.substr(i, j - i));
                i = j;
            } else if (c == '\'' && i + 1 < s.size() &&
                       std::isalnum(static_cast<unsigned char>(s[i + 1]))) {
                // contraction suffix: keep the apostrophe attached ("'d", "'s")
                std::size_t j = i + 1;
                while (j < s.size() && std::isalnum(static_cast<unsigned char>(s[j]))) ++j;
                out.push_back(s.substr(i, j - i));
                i = j;
            } else {
                out.push_back(std::string(1, s[i]));
                ++i;
            }
        }
    }
    return out;
}

inline std::string detokenize(const std::vector<std::string>& tokens) {
    return join(tokens, " ");
}

}  // namespace sitdial
