#include "kgrag/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "kgrag/error.hpp"
#include "kgrag/path_ranking.hpp"
#include "kgrag/path_retrieval.hpp"
#include "kgrag/text.hpp"

namespace kgrag {

// ---------------------------------------------------------------------------
// Config

namespace {

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
    throw Error(ErrorKind::Config, "invalid value for '" + key + "': '" + value + "'");
}

long long to_int(const std::string& key, const std::string& v) {
    long long out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size()) bad_value(key, v);
    return out;
}

std::size_t to_size(const std::string& key, const std::string& v) {
    const auto x = to_int(key, v);
    if (x < 0) bad_value(key, v);
    return static_cast<std::size_t>(x);
}

double to_double(const std::string& key, const std::string& v) {
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (v.empty() || *end != '\0') bad_value(key, v);
    return x;
}

bool to_bool(const std::string& key, const std::string& v) {
    const auto t = text::normalize(v);
    if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
    if (t == "false" || t == "0" || t == "no" || t == "off") return false;
    bad_value(key, v);
}

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct Key {
    std::function<void(PipelineConfig&, const std::string&)> set;
    std::function<std::string(const PipelineConfig&)> get;
};

#define KGRAG_INT_KEY(name, field)                                                                   \
    {name, Key{[](PipelineConfig& c, const std::string& v) { c.field = static_cast<int>(to_int(name, v)); }, \
               [](const PipelineConfig& c) { return std::to_string(c.field); }}}
#define KGRAG_SIZE_KEY(name, field)                                                                  \
    {name, Key{[](PipelineConfig& c, const std::string& v) { c.field = to_size(name, v); },               \
               [](const PipelineConfig& c) { return std::to_string(c.field); }}}
#define KGRAG_DOUBLE_KEY(name, field)                                                                \
    {name, Key{[](PipelineConfig& c, const std::string& v) { c.field = to_double(name, v); },             \
               [](const PipelineConfig& c) { return fmt_double(c.field); }}}
#define KGRAG_BOOL_KEY(name, field)                                                                  \
    {name, Key{[](PipelineConfig& c, const std::string& v) { c.field = to_bool(name, v); },               \
               [](const PipelineConfig& c) { return std::string(c.field ? "true" : "false"); }}}
#define KGRAG_STRING_KEY(name, field)                                                                \
    {name, Key{[](PipelineConfig& c, const std::string& v) { c.field = v; },                              \
               [](const PipelineConfig& c) { return c.field; }}}
#define KGRAG_MS_KEY(name, field)                                                                    \
    {name, Key{[](PipelineConfig& c, const std::string& v) {                                              \
                   c.field = std::chrono::milliseconds(to_size(name, v));                                 \
               },                                                                                         \
               [](const PipelineConfig& c) { return std::to_string(c.field.count()); }}}

const std::vector<std::pair<std::string, Key>>& config_keys() {
    static const std::vector<std::pair<std::string, Key>> keys = {
        KGRAG_INT_KEY("delta", delta),
        KGRAG_INT_KEY("k_simple", preprocess.k_simple),
        KGRAG_INT_KEY("k_complex", preprocess.k_complex),
        KGRAG_SIZE_KEY("n", preprocess.n),
        KGRAG_SIZE_KEY("m", preprocess.m),
        KGRAG_SIZE_KEY("u", u),
        KGRAG_DOUBLE_KEY("alpha", preprocess.alpha),
        KGRAG_INT_KEY("max_iter", preprocess.max_iter),
        KGRAG_DOUBLE_KEY("epsilon", preprocess.epsilon),
        KGRAG_DOUBLE_KEY("ratio", ratio),
        KGRAG_BOOL_KEY("feedback", feedback),
        {"ranker", Key{[](PipelineConfig& c, const std::string& v) {
                           const auto t = text::normalize(v);
                           if (t == "lexical") c.ranker = RankerKind::Lexical;
                           else if (t == "remote") c.ranker = RankerKind::Remote;
                           else bad_value("ranker", v);
                       },
                       [](const PipelineConfig& c) {
                           return std::string(c.ranker == RankerKind::Lexical ? "lexical" : "remote");
                       }}},
        KGRAG_STRING_KEY("ranker_url", remote_ranker.url),
        KGRAG_MS_KEY("ranker_timeout_ms", remote_ranker.timeout),
        KGRAG_STRING_KEY("llm_url", llm.url),
        KGRAG_STRING_KEY("llm_model", generation.model),
        KGRAG_STRING_KEY("llm_api_key_env", llm.api_key_env),
        KGRAG_MS_KEY("llm_timeout_ms", llm.timeout),
        KGRAG_INT_KEY("llm_max_retries", llm.max_retries),
        KGRAG_MS_KEY("llm_retry_backoff_ms", llm.retry_backoff),
        KGRAG_SIZE_KEY("llm_max_in_flight", llm.max_in_flight),
        KGRAG_DOUBLE_KEY("temperature", generation.temperature),
        KGRAG_INT_KEY("max_tokens", generation.max_tokens),
        KGRAG_BOOL_KEY("mock_llm", mock_llm),
        KGRAG_INT_KEY("max_path_hops", max_path_hops),
        KGRAG_SIZE_KEY("max_paths", max_paths),
        KGRAG_INT_KEY("train_epochs", train.epochs),
        KGRAG_DOUBLE_KEY("train_learning_rate", train.learning_rate),
        KGRAG_SIZE_KEY("train_batch_size", train.batch_size),
        KGRAG_DOUBLE_KEY("train_weight_decay", train.weight_decay),
        KGRAG_INT_KEY("adapt_epochs", adapt.epochs),
        KGRAG_DOUBLE_KEY("adapt_learning_rate", adapt.learning_rate),
        KGRAG_SIZE_KEY("adapt_batch_size", adapt.batch_size),
        KGRAG_DOUBLE_KEY("adapt_weight_decay", adapt.weight_decay),
        {"seed", Key{[](PipelineConfig& c, const std::string& v) {
                         c.seed = to_size("seed", v);
                         c.train.seed = c.seed;
                         c.adapt.seed = c.seed;
                     },
                     [](const PipelineConfig& c) { return std::to_string(c.seed); }}},
        KGRAG_SIZE_KEY("workers", workers),
        KGRAG_STRING_KEY("triples", triples_path),
        KGRAG_STRING_KEY("model", model_path),
    };
    return keys;
}

#undef KGRAG_INT_KEY
#undef KGRAG_SIZE_KEY
#undef KGRAG_DOUBLE_KEY
#undef KGRAG_BOOL_KEY
#undef KGRAG_STRING_KEY
#undef KGRAG_MS_KEY

std::string resolve_path(const std::string& p, const std::string& base_dir) {
    if (p.empty() || base_dir.empty()) return p;
    std::filesystem::path path(p);
    if (path.is_absolute()) return p;
    return (std::filesystem::path(base_dir) / path).lexically_normal().string();
}

} // namespace

void PipelineConfig::validate() const {
    preprocess.validate();
    if (delta < 0) throw Error(ErrorKind::Config, "delta must be nonnegative");
    if (u == 0) throw Error(ErrorKind::Config, "u must be positive");
    if (!(ratio >= 0.0 && ratio <= 1.0)) throw Error(ErrorKind::Config, "ratio must lie in [0, 1]");
    if (max_path_hops < 0) throw Error(ErrorKind::Config, "max_path_hops must be nonnegative");
    if (max_paths == 0) throw Error(ErrorKind::Config, "max_paths must be positive");
    if (workers == 0) throw Error(ErrorKind::Config, "workers must be positive");
    if (generation.max_tokens <= 0) throw Error(ErrorKind::Config, "max_tokens must be positive");
    if (llm.max_retries < 0) throw Error(ErrorKind::Config, "llm_max_retries must be nonnegative");
    if (adapt.epochs <= 0 || adapt.learning_rate <= 0.0)
        throw Error(ErrorKind::Config, "adaptation epochs and learning rate must be positive");
    if (ranker == RankerKind::Remote && remote_ranker.url.empty())
        throw Error(ErrorKind::Config, "ranker = remote needs ranker_url");
}

PipelineConfig parse_config(std::istream& in, const std::string& base_dir) {
    PipelineConfig cfg;
    const auto& keys = config_keys();
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto t = text::trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string_view::npos)
            throw Error(ErrorKind::Config, "config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key(text::trim(t.substr(0, eq)));
        const std::string value(text::trim(t.substr(eq + 1)));
        auto it = std::find_if(keys.begin(), keys.end(), [&](const auto& k) { return k.first == key; });
        if (it == keys.end())
            throw Error(ErrorKind::Config, "config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        it->second.set(cfg, value);
    }
    cfg.triples_path = resolve_path(cfg.triples_path, base_dir);
    cfg.model_path = resolve_path(cfg.model_path, base_dir);
    cfg.validate();
    return cfg;
}

PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open config file: " + path);
    return parse_config(in, std::filesystem::path(path).parent_path().string());
}

std::string dump_config(const PipelineConfig& cfg) {
    std::string out;
    for (const auto& [name, key] : config_keys()) out += name + " = " + key.get(cfg) + "\n";
    return out;
}

// ---------------------------------------------------------------------------
// Dataset

namespace {

std::vector<std::string> string_list(const nlohmann::json& j, const char* field, std::size_t line_no) {
    if (!j.contains(field) || !j[field].is_array())
        throw Error(ErrorKind::Parse, "dataset line " + std::to_string(line_no) + ": '" + field + "' must be a list");
    std::vector<std::string> out;
    for (const auto& v : j[field]) {
        if (!v.is_string())
            throw Error(ErrorKind::Parse,
                        "dataset line " + std::to_string(line_no) + ": '" + field + "' must hold strings");
        out.push_back(v.get<std::string>());
    }
    return out;
}

} // namespace

std::vector<DatasetRecord> load_dataset(std::istream& in) {
    std::vector<DatasetRecord> records;
    std::set<std::string> ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object())
            throw Error(ErrorKind::Parse, "dataset line " + std::to_string(line_no) + ": not a JSON object");
        DatasetRecord r;
        if (!j.contains("id") || !(j["id"].is_string() || j["id"].is_number_integer()))
            throw Error(ErrorKind::Parse, "dataset line " + std::to_string(line_no) + ": missing id");
        r.id = j["id"].is_string() ? j["id"].get<std::string>() : std::to_string(j["id"].get<long long>());
        if (!j.contains("question") || !j["question"].is_string() ||
            text::trim(j["question"].get<std::string>()).empty())
            throw Error(ErrorKind::Parse, "dataset line " + std::to_string(line_no) + ": missing question");
        r.question = j["question"].get<std::string>();
        r.question_entities = string_list(j, "question_entities", line_no);
        r.answers = j.contains("answers") ? string_list(j, "answers", line_no) : std::vector<std::string>{};
        if (!ids.insert(r.id).second)
            throw Error(ErrorKind::Parse, "dataset line " + std::to_string(line_no) + ": duplicate id '" + r.id + "'");
        records.push_back(std::move(r));
    }
    return records;
}

std::vector<DatasetRecord> load_dataset_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open dataset: " + path);
    return load_dataset(in);
}

void write_dataset(std::ostream& out, std::span<const DatasetRecord> records) {
    for (const auto& r : records) {
        nlohmann::ordered_json j;
        j["id"] = r.id;
        j["question"] = r.question;
        j["question_entities"] = r.question_entities;
        j["answers"] = r.answers;
        out << j.dump() << '\n';
    }
}

// ---------------------------------------------------------------------------
// Single query

nlohmann::ordered_json to_json(const QueryTrace& t) {
    nlohmann::ordered_json j;
    auto opt = [](const auto& o) -> nlohmann::ordered_json {
        if (o) return *o;
        return nullptr;
    };
    j["id"] = t.id;
    j["route"] = t.route;
    j["route_source"] = t.route_source;
    j["p_complex"] = opt(t.p_complex);
    j["model_version"] = t.model_version;
    j["seeds_requested"] = t.seeds_requested;
    j["seeds_found"] = t.seeds_found;
    j["empty_seed"] = t.empty_seed;
    j["k"] = t.k;
    j["gk"] = {{"nodes", t.gk_nodes}, {"edges", t.gk_edges}};
    j["pruned"] = {{"nodes", t.pruned_nodes}, {"edges", t.pruned_edges}};
    j["focused"] = {{"nodes", t.focused_nodes}, {"edges", t.focused_edges}};
    j["ppr_iterations"] = t.ppr_iterations;
    j["retrieval"] = t.retrieval;
    j["max_path_hops"] = t.max_path_hops;
    j["paths_retrieved"] = t.paths_retrieved;
    j["truncated"] = t.truncated;
    j["paths_ranked"] = t.paths_ranked;
    j["top_path"] = t.top_path;
    j["gold_ranked"] = opt(t.gold_ranked);
    j["retrieval_llm_calls"] = t.retrieval_llm_calls;
    j["generation_llm_calls"] = t.generation_llm_calls;
    j["answer"] = opt(t.answer);
    j["hit"] = opt(t.hit);
    j["feedback_label"] = opt(t.feedback_label);
    j["feedback_hops"] = opt(t.feedback_hops);
    j["adapted"] = t.adapted;
    j["hop_bucket"] = t.hop_bucket;
    if (t.error_stage) {
        j["error"] = {{"stage", *t.error_stage}, {"kind", opt(t.error_kind)}, {"message", opt(t.error_message)}};
    } else {
        j["error"] = nullptr;
    }
    return j;
}

namespace {

void record_error(QueryTrace& trace, std::string stage, const std::exception& e) {
    trace.error_stage = std::move(stage);
    if (const auto* err = dynamic_cast<const Error*>(&e)) {
        trace.error_kind = std::string(to_string(err->kind()));
    } else {
        trace.error_kind = "internal";
    }
    trace.error_message = e.what();
}

bool ends_at_gold(const std::string& path_text, const std::vector<std::string>& gold_normalized) {
    const auto terminal = text::normalize(path_terminal(path_text));
    return std::find(gold_normalized.begin(), gold_normalized.end(), terminal) != gold_normalized.end();
}

} // namespace

QueryOutcome run_query(const KnowledgeGraph& g, const ClassifierModel* model, const PipelineConfig& cfg,
                       const DatasetRecord& record, const Services& services, const QueryOptions& options) {
    QueryOutcome out;
    auto& trace = out.trace;
    trace.id = record.id;
    trace.seeds_requested = record.question_entities.size();
    CountingClient llm(*services.llm);

    // The stage label is updated as the query moves along so a failure is
    // attributed to the step that raised it.
    std::string stage = "entities";
    RankedPaths ranked;
    try {
        const auto seeds = resolve_entities(g, record.question_entities);
        trace.seeds_found = seeds.size();
        if (seeds.empty()) {
            trace.empty_seed = true;
            throw Error(ErrorKind::EmptySeed, "none of the question entities is in the graph");
        }

        stage = "classify";
        Complexity route = Complexity::Simple;
        if (options.route != RouteOverride::None) {
            route = options.route == RouteOverride::Simple ? Complexity::Simple : Complexity::Complex;
            trace.route_source = "override";
        } else {
            if (!model) throw Error(ErrorKind::Config, "no classifier model loaded and no route override given");
            const auto p = predict(*model, record.question);
            route = p.label;
            trace.p_complex = p.p_complex;
            trace.route_source = "classifier";
        }
        if (model) trace.model_version = model->version;
        trace.route = std::string(to_string(route));
        const bool simple = route == Complexity::Simple;
        trace.k = simple ? cfg.preprocess.k_simple : cfg.preprocess.k_complex;

        stage = "subgraph";
        const auto gk = khop_subgraph(g, seeds, trace.k);
        trace.gk_nodes = gk.nodes.size();
        trace.gk_edges = gk.edges.size();

        stage = "entity-pruning";
        PprDiagnostics diag;
        const auto scores = ppr_scores(g, gk, seeds, cfg.preprocess, &diag);
        trace.ppr_iterations = diag.iterations;
        const auto pruned = prune_entities(g, gk, scores, cfg.preprocess.n);
        trace.pruned_nodes = pruned.nodes.size();
        trace.pruned_edges = pruned.edges.size();

        stage = "edge-ranking";
        const auto focused = rank_edges(g, record.question, pruned, *services.edge_ranker, cfg.preprocess.m);
        trace.focused_nodes = focused.nodes.size();
        trace.focused_edges = focused.edges.size();

        stage = "retrieval";
        PathSet paths;
        if (simple) {
            trace.retrieval = "bfs";
            trace.max_path_hops = cfg.max_path_hops > 0 ? cfg.max_path_hops : trace.k;
            paths = bfs_all_paths(g, focused, seeds, PathLimits{trace.max_path_hops, cfg.max_paths});
        } else {
            trace.retrieval = "dijkstra";
            paths = dijkstra_shortest_paths(g, focused, seeds);
            trace.max_path_hops = 0;
            for (const auto& p : paths.paths) trace.max_path_hops = std::max(trace.max_path_hops, static_cast<int>(p.hops()));
        }
        trace.paths_retrieved = paths.paths.size();
        trace.truncated = paths.truncated;

        stage = "path-ranking";
        ranked = rank_paths(g, record.question, paths.paths, *services.path_ranker, cfg.u);
        trace.paths_ranked = ranked.entries.size();
        if (!ranked.entries.empty()) trace.top_path = ranked.entries.front().text;
        trace.retrieval_llm_calls = llm.calls();

        if (!record.answers.empty()) {
            std::vector<std::string> gold;
            for (const auto& a : record.answers) gold.push_back(text::normalize(a));
            trace.gold_ranked = std::any_of(ranked.entries.begin(), ranked.entries.end(),
                                            [&](const RankedPath& p) { return ends_at_gold(p.text, gold); });
        }

        stage = "generation";
        const auto response = generate(llm, render_prompt(record.question, ranked, PromptKind::Answer), cfg.generation);
        out.answer = std::string(text::trim(response.raw_text));
        trace.answer = out.answer;
        if (!record.answers.empty()) trace.hit = hits_at_1(response, record.answers);

        if (options.collect_feedback) {
            stage = "feedback";
            const auto fb = generate(llm, render_prompt(record.question, ranked, PromptKind::Feedback), cfg.generation);
            out.feedback = parse_feedback(fb, cfg.delta);
            if (out.feedback) {
                trace.feedback_label = std::string(to_string(out.feedback->value));
                trace.feedback_hops = out.feedback->min_hop;
            }
        }
    } catch (const std::exception& e) {
        record_error(trace, stage, e);
        if (!trace.answer) out.answer.reset();
        if (!record.answers.empty() && !trace.hit) trace.hit = 0;
    }
    trace.generation_llm_calls = llm.calls() - trace.retrieval_llm_calls;
    return out;
}

// ---------------------------------------------------------------------------
// Batch

nlohmann::ordered_json to_json(const EvalReport& r, bool include_timing) {
    nlohmann::ordered_json j;
    j["total"] = r.total;
    j["hits"] = r.hits;
    j["hits_at_1"] = r.hits_at_1;
    j["recalled"] = r.recalled;
    j["recall_at_u"] = r.recall_at_u;
    nlohmann::ordered_json hops = nlohmann::ordered_json::object();
    for (const auto& [k, b] : r.per_hop) {
        hops[k] = {{"count", b.count},
                   {"hits", b.hits},
                   {"recalled", b.recalled},
                   {"hits_at_1", b.count ? static_cast<double>(b.hits) / static_cast<double>(b.count) : 0.0}};
    }
    j["per_hop"] = hops;
    j["simple_routed"] = r.simple_routed;
    j["complex_routed"] = r.complex_routed;
    j["truncations"] = r.truncations;
    j["empty_seed"] = r.empty_seed;
    j["llm_errors"] = r.llm_errors;
    j["stage_errors"] = r.stage_errors;
    j["retrieval_llm_calls"] = r.retrieval_llm_calls;
    j["generation_llm_calls"] = r.generation_llm_calls;
    j["adapt_calls"] = r.adapt_calls;
    j["feedback_labels"] = r.feedback_labels;
    j["final_model_version"] = r.final_model_version;
    if (include_timing) j["wall_clock_seconds"] = r.wall_clock_seconds;
    return j;
}

std::string format_table(const EvalReport& r) {
    std::ostringstream os;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-22s %10zu\n", "queries", r.total);
    os << buf;
    std::snprintf(buf, sizeof buf, "%-22s %10.4f  (%zu)\n", "hits@1", r.hits_at_1, r.hits);
    os << buf;
    std::snprintf(buf, sizeof buf, "%-22s %10.4f  (%zu)\n", "recall@u", r.recall_at_u, r.recalled);
    os << buf;
    std::snprintf(buf, sizeof buf, "%-22s %10zu / %zu\n", "routed simple/complex", r.simple_routed, r.complex_routed);
    os << buf;
    std::snprintf(buf, sizeof buf, "%-22s %10zu\n", "truncated retrievals", r.truncations);
    os << buf;
    std::snprintf(buf, sizeof buf, "%-22s %10zu\n", "empty seed sets", r.empty_seed);
    os << buf;
    std::snprintf(buf, sizeof buf, "%-22s %10zu\n", "llm errors", r.llm_errors);
    os << buf;
    std::snprintf(buf, sizeof buf, "%-22s %10zu\n", "other stage errors", r.stage_errors);
    os << buf;
    std::snprintf(buf, sizeof buf, "%-22s %10zu\n", "adaptation calls", r.adapt_calls);
    os << buf;
    std::snprintf(buf, sizeof buf, "%-22s %10.2f s\n", "wall clock", r.wall_clock_seconds);
    os << buf;
    os << "per gold min-hop:\n";
    for (const auto& [k, b] : r.per_hop) {
        std::snprintf(buf, sizeof buf, "  %-12s n=%-6zu hits@1=%.4f recall@u=%.4f\n", k.c_str(), b.count,
                      b.count ? static_cast<double>(b.hits) / static_cast<double>(b.count) : 0.0,
                      b.count ? static_cast<double>(b.recalled) / static_cast<double>(b.count) : 0.0);
        os << buf;
    }
    return os.str();
}

namespace {

std::string hop_bucket(const KnowledgeGraph& g, const DatasetRecord& r) {
    try {
        const auto hops = compute_min_hop(g, r.question_entities, r.answers);
        return hops ? std::to_string(*hops) : "unreachable";
    } catch (const Error&) {
        return "unlabeled";
    }
}

} // namespace

EvalResult evaluate(const KnowledgeGraph& g, const ClassifierModel* model, const PipelineConfig& cfg,
                    std::span<const DatasetRecord> dataset, const Services& services, const EvalOptions& options) {
    cfg.validate();
    for (const auto& r : dataset) {
        if (r.answers.empty())
            throw Error(ErrorKind::InvalidArgument, "evaluation record '" + r.id + "' has no gold answers");
    }
    const auto started = std::chrono::steady_clock::now();

    EvalResult result;
    result.traces.resize(dataset.size());
    std::optional<ClassifierModel> current;
    if (model) current = *model;

    std::size_t sequential = 0;
    if (cfg.feedback) {
        if (!current) {
            spdlog::warn("feedback requested without a classifier model; adaptation disabled");
        } else {
            sequential = adaptation_budget(cfg.ratio, dataset.size());
        }
    }

    for (std::size_t i = 0; i < sequential; ++i) {
        const auto& rec = dataset[i];
        auto outcome = run_query(g, &*current, cfg, rec, services, QueryOptions{options.route, true});
        std::vector<LabeledQuestion> fb;
        if (outcome.feedback) fb.push_back(LabeledQuestion{rec.question, outcome.feedback->value});
        current = fast_adapt(*current, fb, cfg.adapt);
        ++result.report.adapt_calls;
        outcome.trace.adapted = !fb.empty();
        outcome.trace.hop_bucket = hop_bucket(g, rec);
        result.traces[i] = std::move(outcome.trace);
    }

    // Remaining records only read the (now fixed) model.
    const ClassifierModel* frozen = current ? &*current : nullptr;
    std::atomic<std::size_t> next{sequential};
    auto worker = [&] {
        for (std::size_t i = next++; i < dataset.size(); i = next++) {
            auto outcome = run_query(g, frozen, cfg, dataset[i], services, QueryOptions{options.route, false});
            outcome.trace.hop_bucket = hop_bucket(g, dataset[i]);
            result.traces[i] = std::move(outcome.trace);
        }
    };
    const auto width = std::min(cfg.workers, std::max<std::size_t>(1, dataset.size() - sequential));
    if (width <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < width; ++w) pool.emplace_back(worker);
    }

    auto& rep = result.report;
    rep.total = dataset.size();
    for (const auto& t : result.traces) {
        auto& bucket = rep.per_hop[t.hop_bucket];
        ++bucket.count;
        const bool hit = t.hit.value_or(0) == 1;
        const bool recalled = t.gold_ranked.value_or(false);
        rep.hits += hit;
        rep.recalled += recalled;
        bucket.hits += hit;
        bucket.recalled += recalled;
        if (t.route == "simple") ++rep.simple_routed;
        if (t.route == "complex") ++rep.complex_routed;
        rep.truncations += t.truncated;
        rep.empty_seed += t.empty_seed;
        if (t.error_stage) {
            if (*t.error_stage == "generation" || *t.error_stage == "feedback") ++rep.llm_errors;
            else ++rep.stage_errors;
        }
        rep.retrieval_llm_calls += t.retrieval_llm_calls;
        rep.generation_llm_calls += t.generation_llm_calls;
        rep.feedback_labels += t.feedback_label.has_value();
    }
    if (rep.total) {
        rep.hits_at_1 = static_cast<double>(rep.hits) / static_cast<double>(rep.total);
        rep.recall_at_u = static_cast<double>(rep.recalled) / static_cast<double>(rep.total);
    }
    rep.final_model_version = current ? current->version : 0;
    result.final_model = std::move(current);
    rep.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return result;
}

ServiceBundle make_services(const PipelineConfig& cfg, std::span<const DatasetRecord> gold) {
    ServiceBundle b;
    if (cfg.ranker == RankerKind::Remote) {
        b.ranker = std::make_unique<RemoteRanker>(cfg.remote_ranker);
    } else {
        b.ranker = std::make_unique<LexicalRanker>();
    }
    if (cfg.mock_llm) {
        auto mock = std::make_unique<MockLlmClient>();
        for (const auto& r : gold) mock->add_gold(r.question, r.answers);
        b.llm = std::move(mock);
    } else {
        b.llm = std::make_unique<ChatClient>(cfg.llm);
    }
    return b;
}

} // namespace kgrag
