#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kgrag/kg_store.hpp"
#include "kgrag/pipeline.hpp"

namespace kgrag::synth {

/// Generated KGQA benchmark: a random background graph plus, for each
/// question, a planted relation chain from a background entity to a fresh
/// answer entity. Questions spell the chain out ("what is the <r_h> of the
/// <r_h-1> ... of <seed>?"), so the number of "of" phrases tracks the hop
/// count. Only chains whose shortest connection in the final graph equals
/// their length are kept, balanced across hop counts.
struct Params {
    std::size_t entities = 5000;
    std::size_t background_triples = 10000;
    std::size_t relation_count = 60;
    int max_hop = 4;
    std::size_t queries_per_hop = 250;
    std::size_t noise_edges_per_intermediate = 1;
    double inverse_fraction = 0.3;
    std::uint64_t seed = 7;
};

struct Benchmark {
    std::vector<Triple> triples;
    std::vector<DatasetRecord> records;
    std::vector<int> hops; ///< gold min-hop per record
};

/// Throws InvalidArgument if the requested balance cannot be met.
Benchmark generate(const Params& params);

/// "domain.attribute" labels; no two share an attribute word.
std::vector<std::string> relation_vocabulary(std::size_t count, std::uint64_t seed);

} // namespace kgrag::synth
