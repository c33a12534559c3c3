#include "kgrag/kg_store.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>

#include <spdlog/spdlog.h>

#include "kgrag/error.hpp"
#include "kgrag/text.hpp"

namespace kgrag {

namespace {

bool arc_less(const Arc& a, const Arc& b) noexcept {
    if (a.relation != b.relation) return a.relation < b.relation;
    if (a.neighbor != b.neighbor) return a.neighbor < b.neighbor;
    return a.direction < b.direction;
}

template <typename Id>
std::unordered_map<std::string_view, Id> build_index(const std::vector<std::string>& names) {
    std::unordered_map<std::string_view, Id> idx;
    idx.reserve(names.size());
    for (std::uint32_t i = 0; i < names.size(); ++i) idx.emplace(names[i], Id{i});
    return idx;
}

} // namespace

KnowledgeGraph KnowledgeGraph::from_triples(std::vector<Triple> triples) {
    KnowledgeGraph g;
    std::vector<std::string> entities;
    std::vector<std::string> relations;
    entities.reserve(triples.size() * 2);
    relations.reserve(triples.size());
    for (auto& t : triples) {
        t.subject = std::string(text::trim(t.subject));
        t.relation = std::string(text::trim(t.relation));
        t.object = std::string(text::trim(t.object));
        if (t.subject.empty() || t.relation.empty() || t.object.empty())
            throw Error(ErrorKind::Parse, "triple has an empty field");
        entities.push_back(t.subject);
        entities.push_back(t.object);
        relations.push_back(t.relation);
    }
    std::sort(entities.begin(), entities.end());
    entities.erase(std::unique(entities.begin(), entities.end()), entities.end());
    std::sort(relations.begin(), relations.end());
    relations.erase(std::unique(relations.begin(), relations.end()), relations.end());

    g.entity_names_ = std::move(entities);
    g.relation_names_ = std::move(relations);
    g.entity_index_ = build_index<EntityId>(g.entity_names_);
    g.relation_index_ = build_index<RelationId>(g.relation_names_);

    g.edges_.reserve(triples.size());
    for (const auto& t : triples) {
        g.edges_.push_back(Edge{g.entity_index_.at(t.subject), g.relation_index_.at(t.relation),
                                g.entity_index_.at(t.object)});
    }
    std::sort(g.edges_.begin(), g.edges_.end());
    g.edges_.erase(std::unique(g.edges_.begin(), g.edges_.end()), g.edges_.end());

    const auto n = static_cast<std::uint32_t>(g.entity_names_.size());
    auto build = [&](Csr& csr, bool use_out, bool use_in) {
        csr.offsets.assign(n + 1, 0);
        for (const auto& e : g.edges_) {
            if (use_out) ++csr.offsets[index(e.subject) + 1];
            if (use_in) ++csr.offsets[index(e.object) + 1];
        }
        for (std::uint32_t v = 0; v < n; ++v) csr.offsets[v + 1] += csr.offsets[v];
        csr.arcs.resize(csr.offsets[n]);
        std::vector<std::uint32_t> fill(csr.offsets.begin(), csr.offsets.end() - 1);
        for (std::uint32_t i = 0; i < g.edges_.size(); ++i) {
            const auto& e = g.edges_[i];
            if (use_out)
                csr.arcs[fill[index(e.subject)]++] = Arc{e.relation, e.object, Direction::Out, TripleId{i}};
            if (use_in)
                csr.arcs[fill[index(e.object)]++] = Arc{e.relation, e.subject, Direction::In, TripleId{i}};
        }
        for (std::uint32_t v = 0; v < n; ++v)
            std::sort(csr.arcs.begin() + csr.offsets[v], csr.arcs.begin() + csr.offsets[v + 1], arc_less);
    };
    build(g.out_, true, false);
    build(g.in_, false, true);
    build(g.both_, true, true);

    g.stats_.entities = g.entity_names_.size();
    g.stats_.relations = g.relation_names_.size();
    g.stats_.triples = g.edges_.size();
    g.stats_.lines_read = triples.size();
    g.stats_.duplicates = triples.size() - g.edges_.size();
    return g;
}

std::optional<EntityId> KnowledgeGraph::find_entity(std::string_view name) const {
    auto it = entity_index_.find(text::trim(name));
    if (it == entity_index_.end()) return std::nullopt;
    return it->second;
}

std::optional<RelationId> KnowledgeGraph::find_relation(std::string_view name) const {
    auto it = relation_index_.find(text::trim(name));
    if (it == relation_index_.end()) return std::nullopt;
    return it->second;
}

Triple KnowledgeGraph::triple(TripleId id) const {
    const auto& e = edge(id);
    return Triple{name(e.subject), name(e.relation), name(e.object)};
}

std::optional<TripleId> KnowledgeGraph::find_triple(const Edge& e) const {
    auto it = std::lower_bound(edges_.begin(), edges_.end(), e);
    if (it == edges_.end() || *it != e) return std::nullopt;
    return TripleId{static_cast<std::uint32_t>(it - edges_.begin())};
}

void KnowledgeGraph::check_entity(EntityId v) const {
    if (index(v) >= entity_names_.size())
        throw Error(ErrorKind::NotFound, "entity id out of range: " + std::to_string(index(v)));
}

std::span<const Arc> KnowledgeGraph::out_arcs(EntityId v) const {
    check_entity(v);
    return out_.row(index(v));
}

std::span<const Arc> KnowledgeGraph::in_arcs(EntityId v) const {
    check_entity(v);
    return in_.row(index(v));
}

std::span<const Arc> KnowledgeGraph::arcs(EntityId v) const {
    check_entity(v);
    return both_.row(index(v));
}

std::vector<Neighbor> KnowledgeGraph::neighbors(std::string_view entity, Traversal traversal) const {
    auto id = find_entity(entity);
    if (!id) throw Error(ErrorKind::NotFound, "unknown entity: " + std::string(entity));
    std::span<const Arc> row;
    switch (traversal) {
    case Traversal::Out: row = out_arcs(*id); break;
    case Traversal::In: row = in_arcs(*id); break;
    case Traversal::Both: row = arcs(*id); break;
    }
    std::vector<Neighbor> out;
    out.reserve(row.size());
    for (const auto& a : row) out.push_back(Neighbor{name(a.relation), name(a.neighbor), a.direction});
    return out;
}

void KnowledgeGraph::dump(std::ostream& out) const {
    for (const auto& e : edges_)
        out << name(e.subject) << '\t' << name(e.relation) << '\t' << name(e.object) << '\n';
}

KnowledgeGraph load_triples(std::istream& in) {
    std::vector<Triple> triples;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        auto trimmed = text::trim(line);
        if (trimmed.empty() || trimmed.front() == '#') continue;
        auto fields = text::split(line, "\t");
        if (fields.size() != 3) {
            throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) +
                                              ": expected 3 tab-separated fields, got " +
                                              std::to_string(fields.size()));
        }
        for (auto& f : fields) {
            if (text::trim(f).empty())
                throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": empty field");
        }
        triples.push_back(Triple{std::move(fields[0]), std::move(fields[1]), std::move(fields[2])});
    }
    if (triples.empty()) throw Error(ErrorKind::EmptyGraph, "no triples in input");
    auto g = KnowledgeGraph::from_triples(std::move(triples));
    g.stats_.lines_read = line_no;
    return g;
}

KnowledgeGraph load_triples_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open triple file: " + path);
    return load_triples(in);
}

bool Subgraph::contains(EntityId v) const noexcept {
    return std::binary_search(nodes.begin(), nodes.end(), v);
}

bool Subgraph::contains(TripleId t) const noexcept {
    return std::binary_search(edges.begin(), edges.end(), t);
}

std::vector<EntityId> resolve_entities(const KnowledgeGraph& g, std::span<const std::string> names) {
    std::vector<EntityId> ids;
    for (const auto& n : names) {
        if (auto id = g.find_entity(n)) {
            ids.push_back(*id);
        } else {
            spdlog::warn("dropping entity not in graph: '{}'", n);
        }
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids;
}

std::vector<TripleId> induced_edges(const KnowledgeGraph& g, std::span<const EntityId> nodes) {
    std::vector<TripleId> edges;
    for (auto v : nodes) {
        for (const auto& a : g.out_arcs(v)) {
            if (std::binary_search(nodes.begin(), nodes.end(), a.neighbor)) edges.push_back(a.triple);
        }
    }
    std::sort(edges.begin(), edges.end());
    return edges;
}

Subgraph khop_subgraph(const KnowledgeGraph& g, std::span<const EntityId> seeds, int k) {
    if (k < 0) throw Error(ErrorKind::InvalidArgument, "hop bound k must be nonnegative");
    Subgraph sg;
    sg.order = k;
    for (auto s : seeds) {
        if (index(s) < g.entity_count()) sg.seeds.push_back(s);
    }
    std::sort(sg.seeds.begin(), sg.seeds.end());
    sg.seeds.erase(std::unique(sg.seeds.begin(), sg.seeds.end()), sg.seeds.end());
    if (sg.seeds.empty()) throw Error(ErrorKind::EmptySeed, "no seed entity is present in the graph");

    // Multi-source frontier expansion; the union of per-seed balls is the set
    // of nodes within k hops of the nearest seed.
    std::vector<std::uint8_t> seen(g.entity_count(), 0);
    std::vector<EntityId> frontier = sg.seeds;
    for (auto s : frontier) seen[index(s)] = 1;
    sg.nodes = frontier;
    for (int depth = 0; depth < k && !frontier.empty(); ++depth) {
        std::vector<EntityId> next;
        for (auto v : frontier) {
            for (const auto& a : g.arcs(v)) {
                if (!seen[index(a.neighbor)]) {
                    seen[index(a.neighbor)] = 1;
                    next.push_back(a.neighbor);
                }
            }
        }
        sg.nodes.insert(sg.nodes.end(), next.begin(), next.end());
        frontier = std::move(next);
    }
    std::sort(sg.nodes.begin(), sg.nodes.end());
    if (k == 0) return sg;

    for (auto v : sg.nodes) {
        for (const auto& a : g.out_arcs(v)) {
            if (seen[index(a.neighbor)]) sg.edges.push_back(a.triple);
        }
    }
    std::sort(sg.edges.begin(), sg.edges.end());
    return sg;
}

Subgraph khop_subgraph(const KnowledgeGraph& g, std::span<const std::string> seeds, int k) {
    auto ids = resolve_entities(g, seeds);
    if (ids.empty()) throw Error(ErrorKind::EmptySeed, "no seed entity is present in the graph");
    return khop_subgraph(g, ids, k);
}

SubgraphView::SubgraphView(const KnowledgeGraph& g, const Subgraph& sg) : nodes_(sg.nodes) {
    const auto n = static_cast<std::uint32_t>(nodes_.size());
    offsets_.assign(n + 1, 0);
    std::vector<std::pair<std::uint32_t, std::uint32_t>> ends;
    ends.reserve(sg.edges.size());
    for (auto t : sg.edges) {
        const auto& e = g.edge(t);
        auto s = local(e.subject);
        auto o = local(e.object);
        if (!s || !o) continue;
        ends.emplace_back(*s, *o);
        ++offsets_[*s + 1];
        ++offsets_[*o + 1];
    }
    for (std::uint32_t v = 0; v < n; ++v) offsets_[v + 1] += offsets_[v];
    arcs_.resize(offsets_[n]);
    std::vector<std::uint32_t> fill(offsets_.begin(), offsets_.end() - 1);
    std::size_t i = 0;
    for (auto t : sg.edges) {
        const auto& e = g.edge(t);
        if (!local(e.subject) || !local(e.object)) continue;
        auto [s, o] = ends[i++];
        arcs_[fill[s]++] = LocalArc{e.relation, o, Direction::Out, t};
        arcs_[fill[o]++] = LocalArc{e.relation, s, Direction::In, t};
    }
    for (std::uint32_t v = 0; v < n; ++v) {
        std::sort(arcs_.begin() + offsets_[v], arcs_.begin() + offsets_[v + 1],
                  [](const LocalArc& a, const LocalArc& b) {
                      if (a.relation != b.relation) return a.relation < b.relation;
                      if (a.neighbor != b.neighbor) return a.neighbor < b.neighbor;
                      return a.direction < b.direction;
                  });
    }
}

std::optional<std::uint32_t> SubgraphView::local(EntityId v) const noexcept {
    auto it = std::lower_bound(nodes_.begin(), nodes_.end(), v);
    if (it == nodes_.end() || *it != v) return std::nullopt;
    return static_cast<std::uint32_t>(it - nodes_.begin());
}

} // namespace kgrag
