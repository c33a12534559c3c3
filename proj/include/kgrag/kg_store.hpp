#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace kgrag {

// Dense ids. Entities and relations are numbered in lexicographic order of
// their names, so comparing ids compares names.
enum class EntityId : std::uint32_t {};
enum class RelationId : std::uint32_t {};
enum class TripleId : std::uint32_t {};

constexpr std::uint32_t index(EntityId id) noexcept { return static_cast<std::uint32_t>(id); }
constexpr std::uint32_t index(RelationId id) noexcept { return static_cast<std::uint32_t>(id); }
constexpr std::uint32_t index(TripleId id) noexcept { return static_cast<std::uint32_t>(id); }

/// Which side of a stored triple an adjacency entry was reached through.
enum class Direction : std::uint8_t { Out, In };

enum class Traversal : std::uint8_t { Out, In, Both };

struct Triple {
    std::string subject;
    std::string relation;
    std::string object;

    friend bool operator==(const Triple&, const Triple&) = default;
    friend auto operator<=>(const Triple&, const Triple&) = default;
};

struct Edge {
    EntityId subject;
    RelationId relation;
    EntityId object;

    friend bool operator==(const Edge&, const Edge&) = default;
    friend auto operator<=>(const Edge&, const Edge&) = default;
};

struct Arc {
    RelationId relation;
    EntityId neighbor;
    Direction direction;
    TripleId triple;
};

struct Neighbor {
    std::string relation;
    std::string neighbor;
    Direction direction;

    friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

struct GraphStats {
    std::size_t entities = 0;
    std::size_t relations = 0;
    std::size_t triples = 0;
    std::size_t lines_read = 0;
    std::size_t duplicates = 0;
};

/// Immutable, indexed triple store. Built once, then shared read-only between
/// query workers.
class KnowledgeGraph {
public:
    KnowledgeGraph() = default;
    KnowledgeGraph(const KnowledgeGraph&) = delete;
    KnowledgeGraph& operator=(const KnowledgeGraph&) = delete;
    KnowledgeGraph(KnowledgeGraph&&) noexcept = default;
    KnowledgeGraph& operator=(KnowledgeGraph&&) noexcept = default;

    /// Fields are trimmed; empty fields throw. Duplicates collapse.
    static KnowledgeGraph from_triples(std::vector<Triple> triples);

    std::size_t entity_count() const noexcept { return entity_names_.size(); }
    std::size_t relation_count() const noexcept { return relation_names_.size(); }
    std::size_t triple_count() const noexcept { return edges_.size(); }
    const GraphStats& stats() const noexcept { return stats_; }

    const std::string& name(EntityId id) const { return entity_names_.at(index(id)); }
    const std::string& name(RelationId id) const { return relation_names_.at(index(id)); }
    std::optional<EntityId> find_entity(std::string_view name) const;
    std::optional<RelationId> find_relation(std::string_view name) const;

    const Edge& edge(TripleId id) const { return edges_.at(index(id)); }
    std::span<const Edge> edges() const noexcept { return edges_; }
    Triple triple(TripleId id) const;
    std::optional<TripleId> find_triple(const Edge& e) const;

    /// Sorted by (relation, neighbor, direction).
    std::span<const Arc> out_arcs(EntityId v) const;
    std::span<const Arc> in_arcs(EntityId v) const;
    std::span<const Arc> arcs(EntityId v) const;

    /// Throws NotFound for an unknown entity.
    std::vector<Neighbor> neighbors(std::string_view entity, Traversal traversal) const;

    /// One tab-separated triple per line, in id order.
    void dump(std::ostream& out) const;

private:
    friend KnowledgeGraph load_triples(std::istream& in);

    struct Csr {
        std::vector<std::uint32_t> offsets;
        std::vector<Arc> arcs;
        std::span<const Arc> row(std::uint32_t v) const {
            return std::span<const Arc>(arcs).subspan(offsets[v], offsets[v + 1] - offsets[v]);
        }
    };

    void check_entity(EntityId v) const;

    std::vector<std::string> entity_names_;
    std::vector<std::string> relation_names_;
    std::unordered_map<std::string_view, EntityId> entity_index_;
    std::unordered_map<std::string_view, RelationId> relation_index_;
    std::vector<Edge> edges_;
    Csr out_;
    Csr in_;
    Csr both_;
    GraphStats stats_;
};

/// Parse TAB-separated triple lines. Blank and '#' lines are skipped.
/// Throws Parse (with line number) on a wrong field count and EmptyGraph when
/// no triple was read.
KnowledgeGraph load_triples(std::istream& in);
KnowledgeGraph load_triples_file(const std::string& path);

/// Node/edge subset of a graph, grown from `seeds` out to `order` hops.
/// All vectors are sorted and duplicate-free.
struct Subgraph {
    std::vector<EntityId> nodes;
    std::vector<TripleId> edges;
    std::vector<EntityId> seeds;
    int order = 0;

    bool contains(EntityId v) const noexcept;
    bool contains(TripleId t) const noexcept;
    bool empty() const noexcept { return nodes.empty(); }
};

/// Resolve names to ids, dropping unknown ones with a warning. Result sorted.
std::vector<EntityId> resolve_entities(const KnowledgeGraph& g,
                                       std::span<const std::string> names);

/// Union of the direction-agnostic k-hop balls around each seed, with every
/// stored edge whose endpoints both lie in the union. k == 0 gives the seeds
/// and no edges.
Subgraph khop_subgraph(const KnowledgeGraph& g, std::span<const EntityId> seeds, int k);
Subgraph khop_subgraph(const KnowledgeGraph& g, std::span<const std::string> seeds, int k);

/// Edges of `g` whose endpoints are both in the sorted node list `nodes`.
std::vector<TripleId> induced_edges(const KnowledgeGraph& g, std::span<const EntityId> nodes);

/// Subgraph-local adjacency (both directions) over compact indices
/// 0..size()-1. Local indices follow entity id order.
class SubgraphView {
public:
    struct LocalArc {
        RelationId relation;
        std::uint32_t neighbor;
        Direction direction;
        TripleId triple;
    };

    SubgraphView(const KnowledgeGraph& g, const Subgraph& sg);

    std::size_t size() const noexcept { return nodes_.size(); }
    EntityId entity(std::uint32_t local) const { return nodes_.at(local); }
    std::optional<std::uint32_t> local(EntityId v) const noexcept;
    std::span<const LocalArc> arcs(std::uint32_t local) const {
        return std::span<const LocalArc>(arcs_).subspan(offsets_[local],
                                                        offsets_[local + 1] - offsets_[local]);
    }
    std::size_t arc_count() const noexcept { return arcs_.size(); }

private:
    std::vector<EntityId> nodes_;
    std::vector<std::uint32_t> offsets_;
    std::vector<LocalArc> arcs_;
};

} // namespace kgrag
