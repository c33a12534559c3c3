#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kgrag/kg_store.hpp"

namespace kgrag {

inline constexpr std::string_view kPathSeparator = " → ";
inline constexpr std::string_view kInverseMarker = "⁻¹";

/// s -r1-> m1 -r2-> ... -> e. `directions[i]` says whether step i follows the
/// stored triple (Out) or walks it backwards (In).
struct ReasoningPath {
    std::vector<EntityId> entities;
    std::vector<RelationId> relations;
    std::vector<Direction> directions;

    std::size_t hops() const noexcept { return relations.size(); }
    EntityId start() const { return entities.front(); }
    EntityId end() const { return entities.back(); }

    friend bool operator==(const ReasoningPath&, const ReasoningPath&) = default;
    friend auto operator<=>(const ReasoningPath&, const ReasoningPath&) = default;
};

/// "e0 → r1 → e1 → ...", inverse steps as "e → r⁻¹ → e'".
std::string render_path(const KnowledgeGraph& g, const ReasoningPath& p);

struct PathLimits {
    int max_hops = 2;
    std::size_t max_paths = 10000;
};

struct PathSet {
    std::vector<ReasoningPath> paths;
    bool truncated = false;
};

/// Every simple path leaving each seed, discovered breadth first: a path is
/// recorded each time it is extended by an edge to an entity it does not yet
/// contain. Stops extending at `max_hops` and stops entirely at `max_paths`
/// (setting `truncated`).
PathSet bfs_all_paths(const KnowledgeGraph& g, const Subgraph& sg, std::span<const EntityId> seeds,
                      const PathLimits& limits = {});

/// One unit-weight shortest path from each seed to each entity it reaches.
/// Among equally short routes the predecessor with the lowest entity id wins.
PathSet dijkstra_shortest_paths(const KnowledgeGraph& g, const Subgraph& sg, std::span<const EntityId> seeds);

} // namespace kgrag
