#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kgrag/classifier.hpp"
#include "kgrag/kg_store.hpp"
#include "kgrag/llm.hpp"
#include "kgrag/preprocess.hpp"
#include "kgrag/ranker.hpp"

namespace kgrag {

enum class RankerKind { Lexical, Remote };

struct PipelineConfig {
    int delta = kDefaultDelta;
    PreprocessConfig preprocess;
    std::size_t u = kDefaultTopPaths;
    double ratio = 0.25;
    bool feedback = false;

    RankerKind ranker = RankerKind::Lexical;
    RemoteRankerConfig remote_ranker;

    ChatClientConfig llm;
    GenerationParams generation;
    bool mock_llm = false;

    int max_path_hops = 0; ///< 0: use the active route's k
    std::size_t max_paths = 10000;

    TrainParams train;
    AdaptParams adapt;
    std::uint64_t seed = 17;
    std::size_t workers = 1;

    std::string triples_path;
    std::string model_path;

    /// Throws Config when any bound is violated.
    void validate() const;
};

/// `key = value` lines, '#' comments. Unknown keys are an error. Relative
/// `triples` / `model` paths resolve against `base_dir`.
PipelineConfig parse_config(std::istream& in, const std::string& base_dir = "");
PipelineConfig load_config(const std::string& path);
/// Every key with its current value, in the same syntax parse_config reads.
std::string dump_config(const PipelineConfig& cfg);

struct DatasetRecord {
    std::string id;
    std::string question;
    std::vector<std::string> question_entities;
    std::vector<std::string> answers;
};

/// One JSON object per line with keys id, question, question_entities,
/// answers. Throws Parse (with line number) for bad lines or duplicate ids.
std::vector<DatasetRecord> load_dataset(std::istream& in);
std::vector<DatasetRecord> load_dataset_file(const std::string& path);
void write_dataset(std::ostream& out, std::span<const DatasetRecord> records);

enum class RouteOverride { None, Simple, Complex };

/// Stage-by-stage record of one query.
struct QueryTrace {
    std::string id;
    std::string route;        ///< "simple" | "complex" | "" when never routed
    std::string route_source; ///< "classifier" | "override"
    std::optional<double> p_complex;
    std::uint64_t model_version = 0;
    std::size_t seeds_requested = 0;
    std::size_t seeds_found = 0;
    bool empty_seed = false;
    int k = 0;
    std::size_t gk_nodes = 0, gk_edges = 0;
    std::size_t pruned_nodes = 0, pruned_edges = 0;
    std::size_t focused_nodes = 0, focused_edges = 0;
    int ppr_iterations = 0;
    std::string retrieval; ///< "bfs" | "dijkstra"
    int max_path_hops = 0;
    std::size_t paths_retrieved = 0;
    bool truncated = false;
    std::size_t paths_ranked = 0;
    std::string top_path;
    std::optional<bool> gold_ranked; ///< a ranked path ends at a gold answer
    std::size_t retrieval_llm_calls = 0;
    std::size_t generation_llm_calls = 0;
    std::optional<std::string> answer;
    std::optional<int> hit;
    std::optional<std::string> feedback_label;
    std::optional<int> feedback_hops;
    bool adapted = false;
    std::optional<std::string> error_stage;
    std::optional<std::string> error_kind;
    std::optional<std::string> error_message;
    std::string hop_bucket; ///< gold min-hop on the full graph, filled by evaluate
};

nlohmann::ordered_json to_json(const QueryTrace& trace);

struct QueryOutcome {
    std::optional<std::string> answer;
    std::optional<ComplexityLabel> feedback;
    QueryTrace trace;
};

/// Rankers and model client a run uses. Not owned.
struct Services {
    const TextRanker* edge_ranker = nullptr;
    const TextRanker* path_ranker = nullptr;
    LlmClient* llm = nullptr;
};

struct QueryOptions {
    RouteOverride route = RouteOverride::None;
    bool collect_feedback = false;
};

/// Classify, extract G_k, prune by PPR then by edge score, retrieve (BFS for
/// simple, Dijkstra for complex), rank, generate. Stage failures land in the
/// trace and leave the answer empty; nothing is thrown for a bad record.
QueryOutcome run_query(const KnowledgeGraph& g, const ClassifierModel* model, const PipelineConfig& cfg,
                       const DatasetRecord& record, const Services& services, const QueryOptions& options = {});

struct HopBucket {
    std::size_t count = 0;
    std::size_t hits = 0;
    std::size_t recalled = 0;
};

struct EvalReport {
    std::size_t total = 0;
    std::size_t hits = 0;
    std::size_t recalled = 0;
    double hits_at_1 = 0.0;
    double recall_at_u = 0.0;
    std::map<std::string, HopBucket> per_hop;
    std::size_t simple_routed = 0;
    std::size_t complex_routed = 0;
    std::size_t truncations = 0;
    std::size_t empty_seed = 0;
    std::size_t llm_errors = 0;
    std::size_t stage_errors = 0;
    std::size_t retrieval_llm_calls = 0;
    std::size_t generation_llm_calls = 0;
    std::size_t adapt_calls = 0;
    std::size_t feedback_labels = 0;
    std::uint64_t final_model_version = 0;
    double wall_clock_seconds = 0.0;
};

/// Timing is left out unless asked for, so two identical runs dump
/// identical bytes.
nlohmann::ordered_json to_json(const EvalReport& report, bool include_timing = false);
std::string format_table(const EvalReport& report);

struct EvalOptions {
    RouteOverride route = RouteOverride::None;
};

struct EvalResult {
    EvalReport report;
    std::vector<QueryTrace> traces;
    std::optional<ClassifierModel> final_model;
};

/// Runs every record. With feedback on, the first ceil(ratio * N) records run
/// in order and each one adapts the classifier before the next; the rest run
/// on `cfg.workers` threads against the final model.
EvalResult evaluate(const KnowledgeGraph& g, const ClassifierModel* model, const PipelineConfig& cfg,
                    std::span<const DatasetRecord> dataset, const Services& services,
                    const EvalOptions& options = {});

/// Owns the rankers and client a config asks for.
struct ServiceBundle {
    std::unique_ptr<TextRanker> ranker;
    std::unique_ptr<LlmClient> llm;
    Services services() const { return Services{ranker.get(), ranker.get(), llm.get()}; }
};

/// Mock client when `cfg.mock_llm`, primed with the gold answers in `gold`.
ServiceBundle make_services(const PipelineConfig& cfg, std::span<const DatasetRecord> gold = {});

} // namespace kgrag
