#include <random>
#include <set>
#include <sstream>
#include <unordered_set>

#include <gtest/gtest.h>

#include "kgrag/error.hpp"
#include "kgrag/kg_store.hpp"
#include "oracles.hpp"

using namespace kgrag;

namespace {

KnowledgeGraph parse(const std::string& text) {
    std::istringstream in(text);
    return load_triples(in);
}

std::set<std::string> names(const KnowledgeGraph& g, const std::vector<EntityId>& ids) {
    std::set<std::string> out;
    for (auto id : ids) out.insert(g.name(id));
    return out;
}

std::set<Triple> triples(const KnowledgeGraph& g, const std::vector<TripleId>& ids) {
    std::set<Triple> out;
    for (auto id : ids) out.insert(g.triple(id));
    return out;
}

} // namespace

TEST(LoadTriples, CountsEntitiesAndTriples) {
    const auto g = parse("A\tr1\tB\nB\tr2\tC");
    EXPECT_EQ(g.entity_count(), 3u);
    EXPECT_EQ(g.relation_count(), 2u);
    EXPECT_EQ(g.triple_count(), 2u);
}

TEST(LoadTriples, RepeatedLineStoredOnce) {
    const auto g = parse("A\tr1\tB\nA\tr1\tB\n");
    EXPECT_EQ(g.triple_count(), 1u);
    EXPECT_EQ(g.stats().duplicates, 1u);
}

TEST(LoadTriples, SkipsBlankAndCommentLines) {
    const auto g = parse("# header\n\nA\tr1\tB\n   \n#A\tr9\tZ\n");
    EXPECT_EQ(g.triple_count(), 1u);
    EXPECT_FALSE(g.find_entity("Z"));
}

TEST(LoadTriples, TrimsFields) {
    const auto g = parse(" A \t r1\tB \n");
    EXPECT_TRUE(g.find_entity("A"));
    EXPECT_TRUE(g.find_entity("B"));
    EXPECT_TRUE(g.find_relation("r1"));
}

TEST(LoadTriples, WrongFieldCountReportsLine) {
    try {
        parse("A\tr1\tB\nA\tr1\n");
        FAIL() << "expected a parse error";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Parse);
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    }
}

TEST(LoadTriples, EmptyStreamIsAnError) {
    try {
        parse("");
        FAIL() << "expected an empty-graph error";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::EmptyGraph);
    }
    EXPECT_THROW(parse("# only a comment\n"), Error);
}

TEST(LoadTriples, DirectedTriplesAreDistinct) {
    const auto g = parse("A\tr\tB\nB\tr\tA\n");
    EXPECT_EQ(g.triple_count(), 2u);
}

TEST(LoadTriples, LargeFileMatchesSetBasedLineCount) {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> ent(0, 199), rel(0, 9);
    std::string text;
    std::unordered_set<std::string> distinct;
    for (int i = 0; i < 10000; ++i) {
        const auto line = "e" + std::to_string(ent(rng)) + "\tr" + std::to_string(rel(rng)) + "\te" +
                          std::to_string(ent(rng));
        distinct.insert(line);
        text += line + "\n";
    }
    const auto g = parse(text);
    EXPECT_EQ(g.triple_count(), distinct.size());
    EXPECT_EQ(g.stats().lines_read, 10000u);
}

TEST(KnowledgeGraph, IdsFollowNameOrder) {
    const auto g = parse("b\tr\ta\nc\tq\ta\n");
    EXPECT_LT(*g.find_entity("a"), *g.find_entity("b"));
    EXPECT_LT(*g.find_entity("b"), *g.find_entity("c"));
    EXPECT_LT(*g.find_relation("q"), *g.find_relation("r"));
}

TEST(KnowledgeGraph, EmptyFieldRejected) {
    EXPECT_THROW(KnowledgeGraph::from_triples({{"A", " ", "B"}}), Error);
}

TEST(Neighbors, OutAndIn) {
    const auto g = parse("A\tr1\tB\n");
    const std::vector<Neighbor> out{{"r1", "B", Direction::Out}};
    const std::vector<Neighbor> in{{"r1", "A", Direction::In}};
    EXPECT_EQ(g.neighbors("A", Traversal::Out), out);
    EXPECT_EQ(g.neighbors("B", Traversal::In), in);
    EXPECT_TRUE(g.neighbors("A", Traversal::In).empty());
}

TEST(Neighbors, BothSortedByRelationThenNeighbor) {
    const auto g = parse("A\tr1\tB\nB\tr2\tC\n");
    const std::vector<Neighbor> want{{"r1", "A", Direction::In}, {"r2", "C", Direction::Out}};
    EXPECT_EQ(g.neighbors("B", Traversal::Both), want);
}

TEST(Neighbors, UnknownEntity) {
    const auto g = parse("A\tr1\tB\n");
    try {
        g.neighbors("Q", Traversal::Both);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::NotFound);
    }
}

TEST(Neighbors, IndexesAreExactInverses) {
    std::mt19937_64 rng(5);
    const auto g = KnowledgeGraph::from_triples(oracle::random_triples(rng, 10, 0.3, 3));
    for (std::uint32_t v = 0; v < g.entity_count(); ++v) {
        for (const auto& a : g.out_arcs(EntityId{v})) {
            const auto in = g.in_arcs(a.neighbor);
            EXPECT_TRUE(std::any_of(in.begin(), in.end(), [&](const Arc& b) {
                return b.neighbor == EntityId{v} && b.relation == a.relation && b.triple == a.triple;
            }));
        }
        EXPECT_EQ(g.arcs(EntityId{v}).size(), g.out_arcs(EntityId{v}).size() + g.in_arcs(EntityId{v}).size());
    }
}

TEST(KnowledgeGraph, DumpRoundTrip) {
    std::mt19937_64 rng(8);
    const auto g = KnowledgeGraph::from_triples(oracle::random_triples(rng, 12, 0.25, 4));
    std::ostringstream out;
    g.dump(out);
    const auto h = parse(out.str());
    ASSERT_EQ(h.triple_count(), g.triple_count());
    ASSERT_EQ(h.entity_count(), g.entity_count());
    for (std::uint32_t t = 0; t < g.triple_count(); ++t) EXPECT_EQ(g.triple(TripleId{t}), h.triple(TripleId{t}));
}

TEST(Khop, ChainTwoHops) {
    const auto g = parse("A\tr\tB\nB\tr\tC\nC\tr\tD\n");
    const std::vector<std::string> seeds{"A"};
    const auto sg = khop_subgraph(g, seeds, 2);
    EXPECT_EQ(names(g, sg.nodes), (std::set<std::string>{"A", "B", "C"}));
    EXPECT_EQ(triples(g, sg.edges), (std::set<Triple>{{"A", "r", "B"}, {"B", "r", "C"}}));
    EXPECT_EQ(sg.order, 2);
}

TEST(Khop, ZeroHopsIsSeedsOnly) {
    const auto g = parse("A\tr\tB\nA\ts\tA\n");
    const std::vector<std::string> seeds{"A"};
    const auto sg = khop_subgraph(g, seeds, 0);
    EXPECT_EQ(names(g, sg.nodes), (std::set<std::string>{"A"}));
    EXPECT_TRUE(sg.edges.empty());
}

TEST(Khop, UnionOfBalls) {
    const auto g = parse("A\tr\tB\nB\tr\tC\n");
    const std::vector<std::string> seeds{"A", "C"};
    const auto sg = khop_subgraph(g, seeds, 1);
    EXPECT_EQ(names(g, sg.nodes), (std::set<std::string>{"A", "B", "C"}));
    EXPECT_EQ(sg.edges.size(), 2u);
}

TEST(Khop, FollowsInverseEdges) {
    const auto g = parse("B\tr\tA\nC\tr\tB\n");
    const std::vector<std::string> seeds{"A"};
    EXPECT_EQ(khop_subgraph(g, seeds, 2).nodes.size(), 3u);
}

TEST(Khop, UnknownSeedsDroppedAllUnknownFails) {
    const auto g = parse("A\tr\tB\n");
    const std::vector<std::string> some{"A", "nope"};
    EXPECT_EQ(khop_subgraph(g, some, 1).nodes.size(), 2u);
    const std::vector<std::string> none{"nope"};
    try {
        khop_subgraph(g, none, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::EmptySeed);
    }
}

TEST(Khop, MatchesBruteForceBallsAndProperties) {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 60; ++trial) {
        const auto raw = oracle::random_triples(rng, 14, 0.08, 3);
        if (raw.empty()) continue;
        const auto g = KnowledgeGraph::from_triples(raw);
        std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(g.entity_count() - 1));
        const std::vector<std::string> a{g.name(EntityId{pick(rng)})}, b{g.name(EntityId{pick(rng)})};
        const std::vector<std::string> ab{a[0], b[0]};
        for (int k = 0; k <= 4; ++k) {
            const auto sg = khop_subgraph(g, ab, k);
            const auto want = oracle::ball(raw, ab, k);
            ASSERT_EQ(names(g, sg.nodes), want);
            std::set<Triple> induced;
            if (k > 0)
                for (const auto& t : raw)
                    if (want.count(t.subject) && want.count(t.object)) induced.insert(t);
            ASSERT_EQ(triples(g, sg.edges), induced);

            // monotone in k
            const auto bigger = khop_subgraph(g, ab, k + 1);
            ASSERT_TRUE(std::includes(bigger.nodes.begin(), bigger.nodes.end(), sg.nodes.begin(), sg.nodes.end()));

            // nodes equal the union of the single-seed balls
            auto na = names(g, khop_subgraph(g, a, k).nodes);
            const auto nb = names(g, khop_subgraph(g, b, k).nodes);
            na.insert(nb.begin(), nb.end());
            ASSERT_EQ(names(g, sg.nodes), na);
        }
    }
}

TEST(SubgraphView, LocalIndicesAndArcs) {
    const auto g = parse("A\tr\tB\nB\ts\tC\nC\tt\tD\n");
    const std::vector<std::string> seeds{"B"};
    const auto sg = khop_subgraph(g, seeds, 1);
    const SubgraphView view(g, sg);
    ASSERT_EQ(view.size(), 3u);
    EXPECT_EQ(view.entity(0), *g.find_entity("A"));
    EXPECT_FALSE(view.local(*g.find_entity("D")));
    EXPECT_EQ(view.arcs(*view.local(*g.find_entity("B"))).size(), 2u);
    EXPECT_EQ(view.arc_count(), 4u);
}
