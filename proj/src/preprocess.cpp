#include "kgrag/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <spdlog/spdlog.h>

#include "kgrag/error.hpp"

namespace kgrag {

void PreprocessConfig::validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorKind::Config, "alpha must lie strictly between 0 and 1");
    if (k_simple < 0 || k_complex < 0) throw Error(ErrorKind::Config, "hop bounds must be nonnegative");
    if (n == 0 || m == 0 || max_iter <= 0) throw Error(ErrorKind::Config, "n, m and max_iter must be positive");
    if (!(epsilon >= 0.0)) throw Error(ErrorKind::Config, "epsilon must be nonnegative");
}

std::vector<EntityScore> ppr_scores(const KnowledgeGraph& g, const Subgraph& sg, std::span<const EntityId> seeds,
                                    const PreprocessConfig& cfg, PprDiagnostics* diagnostics) {
    cfg.validate();
    const SubgraphView view(g, sg);
    const auto n = view.size();

    std::vector<std::uint32_t> seed_local;
    for (auto s : seeds) {
        if (auto l = view.local(s)) seed_local.push_back(*l);
    }
    std::sort(seed_local.begin(), seed_local.end());
    seed_local.erase(std::unique(seed_local.begin(), seed_local.end()), seed_local.end());
    if (seed_local.empty()) throw Error(ErrorKind::EmptySeed, "no seed entity lies in the subgraph");

    const double restart = 1.0 / static_cast<double>(seed_local.size());
    std::vector<double> rank(n, 0.0);
    for (auto s : seed_local) rank[s] = restart;
    std::vector<double> next(n);

    const double alpha = cfg.alpha;
    int iter = 0;
    double change = 0.0;
    while (iter < cfg.max_iter) {
        std::fill(next.begin(), next.end(), 0.0);
        double dangling = 0.0;
        for (std::uint32_t u = 0; u < n; ++u) {
            const auto arcs = view.arcs(u);
            if (arcs.empty()) {
                dangling += rank[u];
                continue;
            }
            const double share = alpha * rank[u] / static_cast<double>(arcs.size());
            for (const auto& a : arcs) next[a.neighbor] += share;
        }
        const double to_seeds = ((1.0 - alpha) + alpha * dangling) * restart;
        for (auto s : seed_local) next[s] += to_seeds;

        change = 0.0;
        for (std::size_t v = 0; v < n; ++v) change += std::abs(next[v] - rank[v]);
        rank.swap(next);
        ++iter;
        if (change < cfg.epsilon) break;
    }
    if (diagnostics) {
        diagnostics->iterations = iter;
        diagnostics->last_change = change;
    }

    std::vector<EntityScore> scores(n);
    for (std::uint32_t v = 0; v < n; ++v) scores[v] = EntityScore{view.entity(v), rank[v]};
    return scores;
}

Subgraph prune_entities(const KnowledgeGraph& g, const Subgraph& sg, std::span<const EntityScore> scores, std::size_t n) {
    if (n == 0) throw Error(ErrorKind::InvalidArgument, "entity budget n must be positive");
    std::vector<EntityScore> ranked;
    ranked.reserve(scores.size());
    for (const auto& s : scores) {
        if (sg.contains(s.entity)) ranked.push_back(s);
    }
    if (ranked.size() != sg.nodes.size())
        throw Error(ErrorKind::InvalidArgument, "entity scores do not cover the subgraph");
    std::sort(ranked.begin(), ranked.end(), [](const EntityScore& a, const EntityScore& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.entity < b.entity;
    });

    Subgraph out;
    out.order = sg.order;
    out.seeds = sg.seeds;
    for (std::size_t i = 0; i < std::min(n, ranked.size()); ++i) out.nodes.push_back(ranked[i].entity);
    for (auto s : sg.seeds) {
        if (sg.contains(s)) out.nodes.push_back(s);
    }
    std::sort(out.nodes.begin(), out.nodes.end());
    out.nodes.erase(std::unique(out.nodes.begin(), out.nodes.end()), out.nodes.end());
    for (auto t : sg.edges) {
        const auto& e = g.edge(t);
        if (out.contains(e.subject) && out.contains(e.object)) out.edges.push_back(t);
    }
    return out;
}

std::string edge_text(const Triple& t) { return t.subject + " " + t.relation + " " + t.object; }

double lexical_edge_score(std::string_view query, const Triple& edge) {
    const std::string doc = edge_text(edge);
    return LexicalRanker{}.score(query, std::span<const std::string>(&doc, 1)).front();
}

std::vector<EdgeScore> score_edges(const KnowledgeGraph& g, std::string_view query, const Subgraph& sg,
                                   const TextRanker& ranker) {
    std::vector<std::string> texts;
    texts.reserve(sg.edges.size());
    for (auto t : sg.edges) texts.push_back(edge_text(g.triple(t)));
    const auto scores = ranker.score(query, texts);
    if (scores.size() != texts.size()) throw Error(ErrorKind::Protocol, "ranker returned the wrong number of scores");
    std::vector<EdgeScore> out(sg.edges.size());
    for (std::size_t i = 0; i < sg.edges.size(); ++i) out[i] = EdgeScore{sg.edges[i], scores[i]};
    return out;
}

Subgraph rank_edges(const KnowledgeGraph& g, std::string_view query, const Subgraph& sg, const TextRanker& ranker,
                    std::size_t m) {
    if (m == 0) throw Error(ErrorKind::InvalidArgument, "edge budget m must be positive");
    Subgraph out;
    out.order = sg.order;
    out.seeds = sg.seeds;
    for (auto s : sg.seeds) {
        if (sg.contains(s)) out.nodes.push_back(s);
    }
    if (sg.edges.empty()) {
        spdlog::warn("edge ranking received a subgraph without edges");
        return out;
    }

    auto scored = score_edges(g, query, sg, ranker);
    const auto keep = std::min(m, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep), scored.end(),
                      [](const EdgeScore& a, const EdgeScore& b) {
                          if (a.score != b.score) return a.score > b.score;
                          return a.triple < b.triple;
                      });
    for (std::size_t i = 0; i < keep; ++i) {
        const auto& e = g.edge(scored[i].triple);
        out.edges.push_back(scored[i].triple);
        out.nodes.push_back(e.subject);
        out.nodes.push_back(e.object);
    }
    std::sort(out.edges.begin(), out.edges.end());
    std::sort(out.nodes.begin(), out.nodes.end());
    out.nodes.erase(std::unique(out.nodes.begin(), out.nodes.end()), out.nodes.end());
    return out;
}

} // namespace kgrag
