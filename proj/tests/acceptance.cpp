// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails. Runs offline with the mock model client.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iterator>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "corpus.hpp"
#include "kgrag/classifier.hpp"
#include "kgrag/pipeline.hpp"
#include "kgrag/preprocess.hpp"
#include "kgrag/synthetic.hpp"
#include "oracles.hpp"

using namespace kgrag;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

struct Outcome {
    bool pass = false;
    std::string detail;
};

Subgraph whole(const KnowledgeGraph& g, std::vector<EntityId> seeds) {
    Subgraph sg;
    for (std::uint32_t v = 0; v < g.entity_count(); ++v) sg.nodes.push_back(EntityId{v});
    for (std::uint32_t t = 0; t < g.triple_count(); ++t) sg.edges.push_back(TripleId{t});
    std::sort(seeds.begin(), seeds.end());
    sg.seeds = std::move(seeds);
    return sg;
}

// Shared corpus for criteria 1 and 2: 200 random directed graphs, at most
// 12 nodes, edge probability 0.3, with one or two seeds each.
struct Instance {
    std::vector<Triple> raw;
    KnowledgeGraph g;
    std::vector<EntityId> seeds;
};

std::vector<Instance> path_corpus() {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<std::size_t> size(2, 12);
    std::vector<Instance> out;
    while (out.size() < 200) {
        auto raw = oracle::random_triples(rng, size(rng), 0.3, 2);
        if (raw.empty()) continue;
        Instance inst{raw, KnowledgeGraph::from_triples(raw), {}};
        std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(inst.g.entity_count() - 1));
        inst.seeds.push_back(EntityId{pick(rng)});
        if (rng() % 2) inst.seeds.push_back(EntityId{pick(rng)});
        std::sort(inst.seeds.begin(), inst.seeds.end());
        inst.seeds.erase(std::unique(inst.seeds.begin(), inst.seeds.end()), inst.seeds.end());
        out.push_back(std::move(inst));
    }
    return out;
}

// Exhaustive: no depth bound on either side. The largest graphs hold a few
// million simple paths, so both sides are compared as compact byte keys.
Outcome bfs_equivalence(const std::vector<Instance>& corpus) {
    double library_secs = 0.0;
    const auto t0 = Clock::now();
    std::size_t paths = 0;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto& c = corpus[i];
        const int unbounded = static_cast<int>(c.g.entity_count());
        const auto t1 = Clock::now();
        auto ps = bfs_all_paths(c.g, whole(c.g, c.seeds), c.seeds,
                                PathLimits{unbounded, std::numeric_limits<std::size_t>::max()});
        library_secs += seconds_since(t1);
        const oracle::PathCodec codec(c.raw);
        const oracle::PathKeyer keyer(codec, c.g);
        std::vector<oracle::PathKey> got, want;
        got.reserve(ps.paths.size());
        for (const auto& p : ps.paths) got.push_back(keyer(p));
        const bool truncated = ps.truncated;
        ps = {};
        for (auto s : c.seeds) {
            auto d = oracle::dfs_path_keys(c.raw, c.g.name(s), unbounded);
            want.insert(want.end(), std::make_move_iterator(d.begin()), std::make_move_iterator(d.end()));
        }
        std::sort(got.begin(), got.end());
        std::sort(want.begin(), want.end());
        const bool unique = std::adjacent_find(got.begin(), got.end()) == got.end();
        if (truncated || !unique || got != want)
            return {false, "graph " + std::to_string(i) + ": " + std::to_string(got.size()) + " paths vs oracle " +
                               std::to_string(want.size())};
        paths += got.size();
    }
    const double secs = seconds_since(t0);
    char buf[240];
    std::snprintf(buf, sizeof buf,
                  "%zu graphs, %zu paths identical to exhaustive DFS enumeration; bfs_all_paths %.2f s "
                  "(limit 10 s), %.2f s including the oracle",
                  corpus.size(), paths, library_secs, secs);
    return {library_secs < 10.0, buf};
}

Outcome dijkstra_optimality(const std::vector<Instance>& corpus) {
    const auto t0 = Clock::now();
    std::size_t checked = 0;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto& c = corpus[i];
        const auto ps = dijkstra_shortest_paths(c.g, whole(c.g, c.seeds), c.seeds);
        std::size_t expected = 0;
        std::map<std::string, std::map<std::string, int>> dist;
        for (auto s : c.seeds) {
            dist[c.g.name(s)] = oracle::distances(c.raw, c.g.name(s));
            expected += dist[c.g.name(s)].size() - 1;
        }
        if (ps.paths.size() != expected)
            return {false, "graph " + std::to_string(i) + ": path count " + std::to_string(ps.paths.size()) +
                               " vs reachable targets " + std::to_string(expected)};
        for (const auto& p : ps.paths) {
            const auto named = oracle::to_named(c.g, p);
            const auto& d = dist.at(named.first);
            if (static_cast<int>(p.hops()) != d.at(c.g.name(p.end())) || !oracle::valid_simple_path(c.raw, named))
                return {false, "graph " + std::to_string(i) + ": non-shortest or invalid path"};
            ++checked;
        }
    }
    const double secs = seconds_since(t0);
    return {secs < 5.0, std::to_string(checked) + " paths at BFS distance, " + std::to_string(secs) +
                            " s (limit 5 s)"};
}

Outcome ppr_correctness() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<std::size_t> size(2, 50);
    double worst_l1 = 0.0, worst_mass = 0.0;
    int graphs = 0;
    PreprocessConfig cfg;
    cfg.alpha = 0.8;
    while (graphs < 100) {
        const auto n = size(rng);
        const auto raw = oracle::random_triples(rng, n, 3.0 / static_cast<double>(n), 3);
        if (raw.empty()) continue;
        const auto g = KnowledgeGraph::from_triples(raw);
        std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(g.entity_count() - 1));
        std::vector<EntityId> seeds{EntityId{pick(rng)}, EntityId{pick(rng)}};
        const auto sg = whole(g, seeds);
        const auto scores = ppr_scores(g, sg, seeds, cfg);
        std::vector<std::string> nodes;
        std::vector<Triple> edges;
        for (auto v : sg.nodes) nodes.push_back(g.name(v));
        for (auto t : sg.edges) edges.push_back(g.triple(t));
        std::vector<std::string> seed_names;
        for (auto s : seeds) seed_names.push_back(g.name(s));
        const auto want = oracle::ppr_dense(nodes, edges, seed_names, cfg.alpha);
        double l1 = 0.0, mass = 0.0;
        for (std::size_t i = 0; i < scores.size(); ++i) {
            l1 += std::abs(scores[i].score - want[i]);
            mass += scores[i].score;
        }
        worst_l1 = std::max(worst_l1, l1);
        worst_mass = std::max(worst_mass, std::abs(mass - 1.0));
        ++graphs;
    }
    const double secs = seconds_since(t0);
    char buf[200];
    std::snprintf(buf, sizeof buf, "100 graphs, worst L1 %.3e (limit 1e-8), worst |mass-1| %.3e (limit 1e-9), %.2f s",
                  worst_l1, worst_mass, secs);
    return {worst_l1 < 1e-8 && worst_mass <= 1e-9 && secs < 20.0, buf};
}

bool subset(const std::vector<EntityId>& a, const std::vector<EntityId>& b) {
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
}
bool subset(const std::vector<TripleId>& a, const std::vector<TripleId>& b) {
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
}
bool closed(const KnowledgeGraph& g, const Subgraph& s) {
    return std::all_of(s.edges.begin(), s.edges.end(),
                       [&](TripleId t) { return s.contains(g.edge(t).subject) && s.contains(g.edge(t).object); });
}

Outcome nesting() {
    std::mt19937_64 rng(5);
    std::size_t violations = 0;
    for (int run = 0; run < 500; ++run) {
        std::uniform_int_distribution<std::size_t> size(5, 60), nb(1, 40), mb(1, 40);
        std::uniform_int_distribution<int> kd(0, 4);
        const auto n = size(rng);
        const auto raw = oracle::random_triples(rng, n, 2.5 / static_cast<double>(n), 4);
        if (raw.empty()) {
            --run;
            continue;
        }
        const auto g = KnowledgeGraph::from_triples(raw);
        std::vector<EntityId> all(g.entity_count());
        for (std::uint32_t v = 0; v < g.entity_count(); ++v) all[v] = EntityId{v};
        std::vector<TripleId> all_edges(g.triple_count());
        for (std::uint32_t t = 0; t < g.triple_count(); ++t) all_edges[t] = TripleId{t};
        std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(g.entity_count() - 1));
        std::vector<EntityId> seeds{EntityId{pick(rng)}};
        if (rng() % 2) seeds.push_back(EntityId{pick(rng)});
        std::sort(seeds.begin(), seeds.end());
        seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());

        PreprocessConfig cfg;
        cfg.n = nb(rng);
        cfg.m = mb(rng);
        const auto gk = khop_subgraph(g, seeds, kd(rng));
        const auto pruned = prune_entities(g, gk, ppr_scores(g, gk, seeds, cfg), cfg.n);
        const auto query = "r" + std::to_string(rng() % 4) + " " + g.name(seeds[0]);
        const auto focused = rank_edges(g, query, pruned, LexicalRanker{}, cfg.m);
        const bool ok = subset(focused.nodes, pruned.nodes) && subset(focused.edges, pruned.edges) &&
                        subset(pruned.nodes, gk.nodes) && subset(pruned.edges, gk.edges) &&
                        subset(gk.nodes, all) && subset(gk.edges, all_edges) && closed(g, gk) &&
                        closed(g, pruned) && closed(g, focused) && focused.edges.size() <= cfg.m;
        violations += ok ? 0 : 1;
    }
    return {violations == 0, "500 randomized runs, " + std::to_string(violations) + " nesting violations"};
}

Outcome hop_labels() {
    std::mt19937_64 rng(77);
    std::size_t agree = 0, boundary = 0, unreachable = 0;
    for (int i = 0; i < 1000; ++i) {
        std::uniform_int_distribution<std::size_t> size(3, 16);
        const auto n = size(rng);
        const auto raw = oracle::random_triples(rng, n, 1.3 / static_cast<double>(n), 2);
        if (raw.empty()) {
            --i;
            continue;
        }
        const auto g = KnowledgeGraph::from_triples(raw);
        std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(g.entity_count() - 1));
        std::vector<std::string> q{g.name(EntityId{pick(rng)})}, a{g.name(EntityId{pick(rng)})};
        if (rng() % 3 == 0) a.push_back(g.name(EntityId{pick(rng)}));
        const auto got_hops = compute_min_hop(g, q, a);
        const auto want_hops = oracle::brute_min_hop(raw, q, a);
        bool same = got_hops == want_hops;
        if (same && got_hops) {
            // independent restatement of the rule: simple iff at most delta hops
            const auto want_label = *want_hops <= 2 ? Complexity::Simple : Complexity::Complex;
            same = label_query(*got_hops, 2).value == want_label;
            boundary += *want_hops == 2;
        }
        unreachable += !want_hops;
        agree += same;
    }
    return {agree == 1000 && boundary > 0,
            std::to_string(agree) + "/1000 agree (" + std::to_string(boundary) + " at the 2-hop boundary, " +
                std::to_string(unreachable) + " unreachable)"};
}

Outcome learnability() {
    const auto data = corpus::labeled(2000, 1234);
    const std::span<const LabeledQuestion> all(data);
    const auto train_set = all.subspan(0, 1600), held_out = all.subspan(1600);
    const auto r = train(train_set, EncoderConfig{}, 2);
    bool monotone = true;
    for (std::size_t i = 1; i < r.report.loss_history.size(); ++i)
        monotone = monotone && r.report.loss_history[i] <= r.report.loss_history[i - 1];
    const double acc = accuracy(r.model, held_out);
    char buf[200];
    std::snprintf(buf, sizeof buf, "held-out accuracy %.4f (min 0.95) over %zu questions, loss %s over %zu epochs", acc,
                  held_out.size(), monotone ? "non-increasing" : "INCREASED", r.report.loss_history.size());
    return {acc >= 0.95 && monotone, buf};
}

Outcome adaptation() {
    auto data = corpus::labeled(2000, 4321);
    std::span<LabeledQuestion> all(data);
    auto train_set = std::vector<LabeledQuestion>(all.begin(), all.begin() + 1600);
    const std::vector<LabeledQuestion> held_out(all.begin() + 1600, all.end());

    // Corrupt 20% of the training labels.
    std::mt19937_64 rng(8);
    std::vector<std::size_t> idx(train_set.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto flips = train_set.size() / 5;
    auto noisy = train_set;
    for (std::size_t i = 0; i < flips; ++i) {
        auto& l = noisy[idx[i]].label;
        l = l == Complexity::Simple ? Complexity::Complex : Complexity::Simple;
    }
    TrainParams tp;
    tp.epochs = 200;
    const auto model = train(noisy, EncoderConfig{}, 2, tp).model;

    // Corrected feedback: the first ratio * N training questions with their true labels.
    const auto budget = adaptation_budget(0.25, train_set.size());
    const std::vector<LabeledQuestion> feedback(train_set.begin(), train_set.begin() + static_cast<std::ptrdiff_t>(budget));
    const double loss_before = mean_loss(model, feedback);
    const double acc_before = accuracy(model, held_out);
    const auto adapted = fast_adapt(model, feedback);
    const double loss_after = mean_loss(adapted, feedback);
    const double acc_after = accuracy(adapted, held_out);
    char buf[240];
    std::snprintf(buf, sizeof buf,
                  "%zu feedback labels: loss %.5f -> %.5f, held-out accuracy %.4f -> %.4f (max drop 0.02)", budget,
                  loss_before, loss_after, acc_before, acc_after);
    return {loss_after < loss_before && acc_after >= acc_before - 0.02 && adapted.version == model.version + 1, buf};
}

// ---------------------------------------------------------------------------
// Generated mini benchmark shared by criteria 8, 9 and 11.

struct MiniBench {
    synth::Benchmark bench;
    KnowledgeGraph g;
    ClassifierModel model;
    std::vector<DatasetRecord> test;
};

MiniBench mini_bench() {
    synth::Params p; // 250 queries per hop for each split
    p.queries_per_hop = 500;
    MiniBench mb;
    mb.bench = synth::generate(p);
    mb.g = KnowledgeGraph::from_triples(mb.bench.triples);
    // Records interleave hop counts, so the halves stay balanced.
    const std::size_t split = 1000;
    std::vector<LabeledQuestion> labeled;
    for (std::size_t i = 0; i < split; ++i) {
        const auto& r = mb.bench.records[i];
        const auto hops = compute_min_hop(mb.g, r.question_entities, r.answers);
        if (hops) labeled.push_back({r.question, label_query(*hops, kDefaultDelta).value});
    }
    mb.model = train(labeled, EncoderConfig{}, kDefaultDelta).model;
    mb.test.assign(mb.bench.records.begin() + split, mb.bench.records.end());
    return mb;
}

struct Runs {
    EvalResult full, simple_only, complex_only;
};

Runs ablation_runs(const MiniBench& mb) {
    PipelineConfig cfg;
    cfg.mock_llm = true;
    auto bundle = make_services(cfg, mb.test);
    Runs r;
    r.full = evaluate(mb.g, &mb.model, cfg, mb.test, bundle.services());
    r.simple_only = evaluate(mb.g, &mb.model, cfg, mb.test, bundle.services(), {RouteOverride::Simple});
    r.complex_only = evaluate(mb.g, &mb.model, cfg, mb.test, bundle.services(), {RouteOverride::Complex});
    return r;
}

Outcome routing_ablation(const MiniBench& mb, const Runs& r) {
    std::map<std::string, std::size_t> per_hop;
    for (const auto& t : r.full.traces) ++per_hop[t.hop_bucket];
    const bool balanced = mb.test.size() == 1000 && per_hop.size() == 4 &&
                          std::all_of(per_hop.begin(), per_hop.end(), [](const auto& kv) { return kv.second == 250; });
    const auto& f = r.full.report;
    const auto& s = r.simple_only.report;
    const auto& c = r.complex_only.report;
    const bool order = f.recall_at_u >= s.recall_at_u && f.recall_at_u >= c.recall_at_u;
    const bool equal = f.hits == f.recalled && s.hits == s.recalled && c.hits == c.recalled;
    char buf[300];
    std::snprintf(buf, sizeof buf,
                  "recall@u full %.3f, simple-only %.3f, complex-only %.3f; hits@1 == recall@u in all three: %s; "
                  "1000 queries balanced over hops 1-4: %s",
                  f.recall_at_u, s.recall_at_u, c.recall_at_u, equal ? "yes" : "no", balanced ? "yes" : "no");
    return {balanced && order && equal, buf};
}

Outcome zero_retrieval_calls(const Runs& r) {
    std::size_t traces = 0, retrieval_calls = 0, generation_calls = 0;
    for (const auto* run : {&r.full, &r.simple_only, &r.complex_only}) {
        for (const auto& t : run->traces) {
            ++traces;
            retrieval_calls += t.retrieval_llm_calls;
            generation_calls += t.generation_llm_calls;
        }
    }
    return {retrieval_calls == 0 && generation_calls == traces,
            std::to_string(traces) + " traces: " + std::to_string(retrieval_calls) +
                " model calls during retrieval, " + std::to_string(generation_calls) + " during generation"};
}

Outcome performance() {
    // 100k triples: 38k background entities at the default density, planted
    // chains for 2000 questions (half train, half evaluated).
    synth::Params p;
    p.entities = 38000;
    p.background_triples = 76500;
    p.queries_per_hop = 500;
    p.seed = 11;
    const auto bench = synth::generate(p);
    const auto g = KnowledgeGraph::from_triples(bench.triples);
    std::vector<LabeledQuestion> labeled;
    for (std::size_t i = 0; i < 1000; ++i)
        labeled.push_back({bench.records[i].question, label_query(bench.hops[i]).value});
    const auto model = train(labeled, EncoderConfig{}, kDefaultDelta).model;
    const std::vector<DatasetRecord> test(bench.records.begin() + 1000, bench.records.end());

    PipelineConfig cfg; // n 2000, m 64, u 32, one worker
    cfg.mock_llm = true;
    auto bundle = make_services(cfg, test);
    const auto t0 = Clock::now();
    const auto res = evaluate(g, &model, cfg, test, bundle.services());
    const double secs = seconds_since(t0);
    char buf[240];
    std::snprintf(buf, sizeof buf, "%zu triples, %zu queries, 1 worker: %.2f s (limit 120 s), hits@1 %.3f",
                  g.triple_count(), test.size(), secs, res.report.hits_at_1);
    return {g.triple_count() >= 100000 && test.size() == 1000 && cfg.workers == 1 && secs < 120.0, buf};
}

Outcome determinism() {
    auto run = [] {
        const auto mb = mini_bench();
        PipelineConfig cfg;
        cfg.mock_llm = true;
        cfg.feedback = true;
        cfg.workers = 4;
        auto bundle = make_services(cfg, mb.test);
        const auto res = evaluate(mb.g, &mb.model, cfg, mb.test, bundle.services());
        std::ostringstream traces;
        for (const auto& t : res.traces) traces << to_json(t).dump() << '\n';
        return std::pair{to_json(res.report).dump(2), traces.str()};
    };
    const auto a = run();
    const auto b = run();
    const bool same = a.first == b.first && a.second == b.second;
    return {same, "two full runs (feedback on, 4 workers): report " + std::to_string(a.first.size()) +
                      " bytes, trace log " + std::to_string(a.second.size()) + " bytes, " +
                      (same ? "byte-identical" : "DIFFERENT")};
}

} // namespace

int main() {
    spdlog::set_level(spdlog::level::err);
    int failed = 0;
    auto report = [&](int id, const char* name, const std::function<Outcome()>& fn) {
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::printf("%s [%d] %s: %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
        std::fflush(stdout);
        failed += o.pass ? 0 : 1;
    };

    const auto corpus = path_corpus();
    report(1, "BFS oracle equivalence", [&] { return bfs_equivalence(corpus); });
    report(2, "Dijkstra optimality", [&] { return dijkstra_optimality(corpus); });
    report(3, "PPR correctness", ppr_correctness);
    report(4, "Subgraph nesting", nesting);
    report(5, "Hop-labeling oracle", hop_labels);
    report(6, "Classifier learnability", learnability);
    report(7, "Feedback adaptation", adaptation);

    std::optional<MiniBench> mb;
    std::optional<Runs> runs;
    try {
        mb = mini_bench();
        runs = ablation_runs(*mb);
    } catch (const std::exception& e) {
        std::printf("benchmark setup failed: %s\n", e.what());
    }
    report(8, "End-to-end routing ablation", [&] {
        if (!runs) return Outcome{false, "benchmark unavailable"};
        return routing_ablation(*mb, *runs);
    });
    report(9, "Zero-LLM-call retrieval", [&] {
        if (!runs) return Outcome{false, "benchmark unavailable"};
        return zero_retrieval_calls(*runs);
    });
    report(10, "Performance envelope", performance);
    report(11, "Determinism", determinism);

    std::printf("%d of 11 criteria failed\n", failed);
    return failed == 0 ? 0 : 1;
}
