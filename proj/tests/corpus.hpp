#pragma once

// Generated question corpus whose wording tracks reasoning depth: deeper
// questions chain more relation phrases and use connectives such as
// "and then". Separable by construction.

#include <random>
#include <string>
#include <vector>

#include "kgrag/classifier.hpp"

namespace corpus {

inline const std::vector<std::string> kRelations = {
    "director", "spouse",  "capital", "founder", "author", "mayor",   "coach", "owner",
    "sponsor",  "teacher", "rival",   "editor",  "heir",   "captain", "dean",  "producer"};
inline const std::vector<std::string> kNames = {"Alien",  "Paris",  "Nile",   "Oxford", "Everest", "Apollo",
                                                "Tesla",  "Monaco", "Hamlet", "Orion",  "Kyoto",   "Lisbon",
                                                "Vienna", "Sahara", "Gemini", "Quebec", "Mozart",  "Sparta"};
inline const std::vector<std::string> kShallow = {"who is the {r} of {e}?", "what is the {r} of {e}?",
                                                  "name the {r} of {e}", "which person is the {r} of {e}?"};

struct Question {
    std::string text;
    int depth = 1;
};

inline std::string fill(std::string t, const std::string& r, const std::string& e) {
    t.replace(t.find("{r}"), 3, r);
    t.replace(t.find("{e}"), 3, e);
    return t;
}

inline Question make_question(std::mt19937_64& rng, int depth) {
    std::uniform_int_distribution<std::size_t> rel(0, kRelations.size() - 1), name(0, kNames.size() - 1),
        lead(0, kShallow.size() - 1);
    const auto e = kNames[name(rng)];
    if (depth == 1) return {fill(kShallow[lead(rng)], kRelations[rel(rng)], e), depth};
    if (depth == 2) return {fill(kShallow[lead(rng)], kRelations[rel(rng)] + " of the " + kRelations[rel(rng)], e), depth};
    // Deep questions chain the lookups explicitly.
    std::string q = "find the " + kRelations[rel(rng)] + " of " + e;
    for (int d = 1; d < depth; ++d) q += " and then the " + kRelations[rel(rng)] + " of that one";
    return {q, depth};
}

/// `n` questions, depths cycling 1..4, labelled Simple iff depth <= delta.
inline std::vector<kgrag::LabeledQuestion> labeled(std::size_t n, std::uint64_t seed, int delta = 2) {
    std::mt19937_64 rng(seed);
    std::vector<kgrag::LabeledQuestion> out;
    for (std::size_t i = 0; i < n; ++i) {
        const auto q = make_question(rng, static_cast<int>(i % 4) + 1);
        out.push_back({q.text, kgrag::label_query(q.depth, delta).value});
    }
    std::shuffle(out.begin(), out.end(), rng);
    return out;
}

} // namespace corpus
