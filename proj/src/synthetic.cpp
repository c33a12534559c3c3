#include "kgrag/synthetic.hpp"

#include <algorithm>
#include <cstdio>
#include <random>

#include "kgrag/classifier.hpp"
#include "kgrag/error.hpp"

namespace kgrag::synth {

namespace {

const std::vector<std::string> kDomains = {"film",  "music", "sport", "book",  "city",   "person",
                                           "company", "river", "award", "game", "school", "planet"};
// One attribute word per relation, so a relation phrase never partially
// matches a different relation.
const std::vector<std::string> kAttributes = {
    "director", "genre",    "capital",  "spouse",   "founder",  "coach",     "author",   "mayor",
    "source",   "winner",   "language", "anthem",   "owner",    "rival",     "sponsor",  "editor",
    "producer", "composer", "mascot",   "currency", "border",   "sibling",   "mentor",   "publisher",
    "venue",    "sequel",   "prequel",  "member",   "designer", "architect", "patron",   "successor",
    "heir",     "rector",   "governor", "treasurer","narrator", "illustrator","curator", "translator",
    "landmark", "harbor",   "delta",    "summit",   "tributary","estuary",   "moon",     "orbit",
    "discoverer","namesake","emblem",   "motto",    "chancellor","dean",     "referee",  "captain",
    "stadium",  "label",    "studio",   "distributor"};
const std::vector<std::string> kLeads = {"what is the", "which is the", "name the", "tell me the"};

std::string entity_name(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "E%06zu", i);
    return buf;
}

std::string phrase(const std::string& relation) {
    std::string out = relation;
    std::replace(out.begin(), out.end(), '.', ' ');
    return out;
}

struct Candidate {
    DatasetRecord record;
    int chain_length = 0;
};

} // namespace

std::vector<std::string> relation_vocabulary(std::size_t count, std::uint64_t seed) {
    if (count > kAttributes.size()) throw Error(ErrorKind::InvalidArgument, "relation vocabulary too small");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick_domain(0, kDomains.size() - 1);
    std::vector<std::string> attributes = kAttributes;
    std::shuffle(attributes.begin(), attributes.end(), rng);
    std::vector<std::string> all;
    for (std::size_t i = 0; i < count; ++i) all.push_back(kDomains[pick_domain(rng)] + "." + attributes[i]);
    std::sort(all.begin(), all.end());
    return all;
}

Benchmark generate(const Params& params) {
    if (params.entities < 2 || params.relation_count == 0 || params.max_hop < 1)
        throw Error(ErrorKind::InvalidArgument, "synthetic benchmark parameters out of range");
    std::mt19937_64 rng(params.seed);
    const auto relations = relation_vocabulary(params.relation_count, params.seed);
    std::uniform_int_distribution<std::size_t> pick_entity(0, params.entities - 1);
    std::uniform_int_distribution<std::size_t> pick_relation(0, relations.size() - 1);
    std::uniform_int_distribution<std::size_t> pick_lead(0, kLeads.size() - 1);
    std::bernoulli_distribution inverse(params.inverse_fraction);

    Benchmark out;
    for (std::size_t i = 0; i < params.background_triples; ++i) {
        const auto s = pick_entity(rng);
        auto o = pick_entity(rng);
        if (o == s) o = (o + 1) % params.entities;
        out.triples.push_back(Triple{entity_name(s), relations[pick_relation(rng)], entity_name(o)});
    }

    // Plant three candidates per wanted question and keep the clean ones.
    std::size_t next_entity = params.entities;
    std::vector<Candidate> candidates;
    for (int hop = 1; hop <= params.max_hop; ++hop) {
        for (std::size_t q = 0; q < params.queries_per_hop * 3; ++q) {
            const auto seed_entity = entity_name(pick_entity(rng));
            std::string prev = seed_entity;
            std::vector<std::string> chain;
            std::string answer;
            for (int step = 0; step < hop; ++step) {
                const auto rel = relations[pick_relation(rng)];
                const auto node = entity_name(next_entity++);
                if (inverse(rng)) {
                    out.triples.push_back(Triple{node, rel, prev});
                } else {
                    out.triples.push_back(Triple{prev, rel, node});
                }
                if (step + 1 < hop) {
                    for (std::size_t k = 0; k < params.noise_edges_per_intermediate; ++k) {
                        out.triples.push_back(
                            Triple{node, relations[pick_relation(rng)], entity_name(pick_entity(rng))});
                    }
                }
                chain.push_back(rel);
                prev = node;
                answer = node;
            }
            std::string question = kLeads[pick_lead(rng)];
            for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
                if (it != chain.rbegin()) question += " of the";
                question += " " + phrase(*it);
            }
            question += " of " + seed_entity + "?";

            Candidate c;
            c.chain_length = hop;
            c.record.question = std::move(question);
            c.record.question_entities = {seed_entity};
            c.record.answers = {answer};
            candidates.push_back(std::move(c));
        }
    }

    const auto graph = KnowledgeGraph::from_triples(out.triples);
    std::vector<std::size_t> kept(static_cast<std::size_t>(params.max_hop) + 1, 0);
    std::vector<std::vector<Candidate>> by_hop(static_cast<std::size_t>(params.max_hop) + 1);
    for (auto& c : candidates) {
        auto& bucket = by_hop[static_cast<std::size_t>(c.chain_length)];
        if (bucket.size() >= params.queries_per_hop) continue;
        const auto hops = compute_min_hop(graph, c.record.question_entities, c.record.answers);
        if (hops && *hops == c.chain_length) bucket.push_back(std::move(c));
    }
    for (int hop = 1; hop <= params.max_hop; ++hop) {
        if (by_hop[static_cast<std::size_t>(hop)].size() < params.queries_per_hop)
            throw Error(ErrorKind::InvalidArgument, "could not plant enough clean " + std::to_string(hop) + "-hop questions");
    }

    // Interleave hop counts so any prefix of the dataset stays balanced.
    for (std::size_t i = 0; i < params.queries_per_hop; ++i) {
        for (int hop = 1; hop <= params.max_hop; ++hop) {
            auto& c = by_hop[static_cast<std::size_t>(hop)][i];
            c.record.id = "q" + std::to_string(out.records.size());
            out.records.push_back(std::move(c.record));
            out.hops.push_back(hop);
        }
    }
    return out;
}

} // namespace kgrag::synth
