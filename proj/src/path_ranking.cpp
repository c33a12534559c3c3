#include "kgrag/path_ranking.hpp"

#include <algorithm>

#include "kgrag/error.hpp"

namespace kgrag {

std::vector<std::string> RankedPaths::texts() const {
    std::vector<std::string> out;
    out.reserve(entries.size());
    for (const auto& e : entries) out.push_back(e.text);
    return out;
}

RankedPaths rank_paths(const KnowledgeGraph& g, std::string_view query, std::span<const ReasoningPath> paths,
                       const TextRanker& ranker, std::size_t u) {
    if (u == 0) throw Error(ErrorKind::InvalidArgument, "path cutoff u must be positive");
    RankedPaths out;
    out.u = u;
    if (paths.empty()) return out;

    std::vector<std::string> texts;
    texts.reserve(paths.size());
    for (const auto& p : paths) texts.push_back(render_path(g, p));
    const auto scores = ranker.score(query, texts);
    if (scores.size() != texts.size()) throw Error(ErrorKind::Protocol, "ranker returned the wrong number of scores");

    std::vector<std::size_t> order(paths.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    const auto keep = std::min(u, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(),
                      [&](std::size_t a, std::size_t b) {
                          if (scores[a] != scores[b]) return scores[a] > scores[b];
                          if (texts[a] != texts[b]) return texts[a] < texts[b];
                          return paths[a] < paths[b];
                      });
    out.entries.reserve(keep);
    for (std::size_t i = 0; i < keep; ++i) {
        const auto k = order[i];
        out.entries.push_back(RankedPath{paths[k], std::move(texts[k]), scores[k]});
    }
    return out;
}

} // namespace kgrag
