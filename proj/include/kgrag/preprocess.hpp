#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kgrag/kg_store.hpp"
#include "kgrag/ranker.hpp"

namespace kgrag {

struct PreprocessConfig {
    int k_simple = 2;
    int k_complex = 4;
    std::size_t n = 2000;  ///< entities kept after PPR pruning
    std::size_t m = 64;    ///< edges kept after edge ranking
    double alpha = 0.8;    ///< PPR damping (probability of following an edge)
    int max_iter = 1000;
    double epsilon = 1e-10; ///< L1 change that counts as converged

    /// Throws Config when a bound is out of range.
    void validate() const;
};

struct EntityScore {
    EntityId entity;
    double score = 0.0;
};

struct EdgeScore {
    TripleId triple;
    double score = 0.0;
};

struct PprDiagnostics {
    int iterations = 0;
    double last_change = 0.0;
};

/// Personalized PageRank over the subgraph, edges walked in both directions.
/// Restart mass is split evenly over the seeds present in `sg`; mass sitting
/// on a node without edges also returns to the seeds. One score per node, in
/// node order. Throws EmptySeed when no seed lies in the subgraph.
std::vector<EntityScore> ppr_scores(const KnowledgeGraph& g, const Subgraph& sg, std::span<const EntityId> seeds,
                                    const PreprocessConfig& cfg, PprDiagnostics* diagnostics = nullptr);

/// Keep the n best-scoring nodes (ties: lower id first) plus every seed, and
/// the subgraph edges between kept nodes.
Subgraph prune_entities(const KnowledgeGraph& g, const Subgraph& sg, std::span<const EntityScore> scores, std::size_t n);

/// Text an edge is scored by: "subject relation object".
std::string edge_text(const Triple& t);

/// Lexical score of a single edge: the LexicalRanker applied to a one-edge
/// collection.
double lexical_edge_score(std::string_view query, const Triple& edge);

std::vector<EdgeScore> score_edges(const KnowledgeGraph& g, std::string_view query, const Subgraph& sg,
                                   const TextRanker& ranker);

/// Keep the top-m edges (score desc, then triple id) with their endpoints.
/// Seeds already in `sg` stay as nodes. No edges in -> seeds only, warning.
Subgraph rank_edges(const KnowledgeGraph& g, std::string_view query, const Subgraph& sg, const TextRanker& ranker,
                    std::size_t m);

} // namespace kgrag
