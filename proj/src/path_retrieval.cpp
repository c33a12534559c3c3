#include "kgrag/path_retrieval.hpp"

#include <algorithm>
#include <limits>
#include <queue>

namespace kgrag {

namespace {

std::vector<std::uint32_t> local_seeds(const SubgraphView& view, std::span<const EntityId> seeds) {
    std::vector<std::uint32_t> out;
    for (auto s : seeds) {
        if (auto l = view.local(s)) out.push_back(*l);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

} // namespace

std::string render_path(const KnowledgeGraph& g, const ReasoningPath& p) {
    std::string out = g.name(p.entities.front());
    for (std::size_t i = 0; i < p.relations.size(); ++i) {
        out += kPathSeparator;
        out += g.name(p.relations[i]);
        if (p.directions[i] == Direction::In) out += kInverseMarker;
        out += kPathSeparator;
        out += g.name(p.entities[i + 1]);
    }
    return out;
}

PathSet bfs_all_paths(const KnowledgeGraph& g, const Subgraph& sg, std::span<const EntityId> seeds,
                      const PathLimits& limits) {
    PathSet result;
    if (sg.empty() || limits.max_paths == 0 || limits.max_hops <= 0) return result;
    const SubgraphView view(g, sg);

    // Paths form a trie per seed; scanning it in insertion order is the BFS
    // queue, and each entry is materialised once at the end.
    struct Node {
        std::uint32_t parent; // kRoot for first-hop entries
        std::uint32_t depth;
        const SubgraphView::LocalArc* arc;
    };
    constexpr std::uint32_t kRoot = std::numeric_limits<std::uint32_t>::max();
    std::size_t produced = 0;

    // mark[v] == stamp flags v as on the path being extended.
    std::vector<std::uint32_t> mark(view.size(), 0);
    std::uint32_t stamp = 0;

    for (auto seed : local_seeds(view, seeds)) {
        std::vector<Node> trie;
        auto extend = [&](std::uint32_t idx, std::uint32_t from, std::uint32_t depth) {
            ++stamp;
            mark[seed] = stamp;
            for (auto i = idx; i != kRoot; i = trie[i].parent) mark[trie[i].arc->neighbor] = stamp;
            for (const auto& arc : view.arcs(from)) {
                if (mark[arc.neighbor] == stamp) continue;
                if (produced >= limits.max_paths) {
                    result.truncated = true;
                    return false;
                }
                trie.push_back(Node{idx, depth, &arc});
                ++produced;
            }
            return true;
        };
        bool open = extend(kRoot, seed, 1);
        for (std::size_t i = 0; open && i < trie.size(); ++i) {
            if (static_cast<int>(trie[i].depth) >= limits.max_hops) continue;
            open = extend(static_cast<std::uint32_t>(i), trie[i].arc->neighbor, trie[i].depth + 1);
        }

        result.paths.reserve(result.paths.size() + trie.size());
        for (std::size_t i = 0; i < trie.size(); ++i) {
            const auto hops = trie[i].depth;
            ReasoningPath p;
            p.entities.resize(hops + 1);
            p.relations.resize(hops);
            p.directions.resize(hops);
            p.entities[0] = view.entity(seed);
            auto idx = static_cast<std::uint32_t>(i);
            for (auto h = hops; h > 0; --h, idx = trie[idx].parent) {
                const auto* arc = trie[idx].arc;
                p.entities[h] = view.entity(arc->neighbor);
                p.relations[h - 1] = arc->relation;
                p.directions[h - 1] = arc->direction;
            }
            result.paths.push_back(std::move(p));
        }
        if (!open) break;
    }
    return result;
}

PathSet dijkstra_shortest_paths(const KnowledgeGraph& g, const Subgraph& sg, std::span<const EntityId> seeds) {
    PathSet result;
    if (sg.empty()) return result;
    const SubgraphView view(g, sg);
    const auto n = static_cast<std::uint32_t>(view.size());
    constexpr int kInf = std::numeric_limits<int>::max();
    constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();

    struct Pred {
        std::uint32_t node = kNone;
        const SubgraphView::LocalArc* arc = nullptr; // arc stored at `node`
    };

    for (auto seed : local_seeds(view, seeds)) {
        std::vector<int> dist(n, kInf);
        std::vector<Pred> pred(n);
        using Item = std::pair<int, std::uint32_t>;
        std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
        dist[seed] = 0;
        heap.emplace(0, seed);
        while (!heap.empty()) {
            const auto [d, u] = heap.top();
            heap.pop();
            if (d != dist[u]) continue;
            for (const auto& arc : view.arcs(u)) {
                const auto v = arc.neighbor;
                if (dist[u] + 1 < dist[v]) {
                    dist[v] = dist[u] + 1;
                    pred[v] = Pred{u, &arc};
                    heap.emplace(dist[v], v);
                }
            }
        }
        for (std::uint32_t t = 0; t < n; ++t) {
            if (t == seed || dist[t] == kInf) continue;
            ReasoningPath p;
            p.entities.resize(static_cast<std::size_t>(dist[t]) + 1);
            p.relations.resize(static_cast<std::size_t>(dist[t]));
            p.directions.resize(static_cast<std::size_t>(dist[t]));
            std::uint32_t cur = t;
            for (int i = dist[t]; i > 0; --i) {
                const auto& step = pred[cur];
                p.entities[static_cast<std::size_t>(i)] = view.entity(cur);
                p.relations[static_cast<std::size_t>(i - 1)] = step.arc->relation;
                p.directions[static_cast<std::size_t>(i - 1)] = step.arc->direction;
                cur = step.node;
            }
            p.entities[0] = view.entity(cur);
            result.paths.push_back(std::move(p));
        }
    }
    return result;
}

} // namespace kgrag
