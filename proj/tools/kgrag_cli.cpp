// kgrag: command-line front end for the knowledge-graph RAG engine.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "kgrag/classifier.hpp"
#include "kgrag/error.hpp"
#include "kgrag/kg_store.hpp"
#include "kgrag/llm.hpp"
#include "kgrag/pipeline.hpp"

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

using namespace kgrag;

RouteOverride parse_route(const std::string& s) {
    if (s.empty()) return RouteOverride::None;
    if (s == "simple") return RouteOverride::Simple;
    if (s == "complex") return RouteOverride::Complex;
    throw Error(ErrorKind::Config, "--force-route must be 'simple' or 'complex'");
}

std::optional<ClassifierModel> maybe_model(const PipelineConfig& cfg, RouteOverride route) {
    if (!cfg.model_path.empty()) return load_model_file(cfg.model_path);
    if (route == RouteOverride::None)
        throw Error(ErrorKind::Config, "config has no 'model' and no --force-route was given");
    return std::nullopt;
}

KnowledgeGraph graph_from(const PipelineConfig& cfg) {
    if (cfg.triples_path.empty()) throw Error(ErrorKind::Config, "config has no 'triples' path");
    return load_triples_file(cfg.triples_path);
}

void write_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
    out << contents;
}

int cmd_ingest(const std::string& triples, const std::string& dump_path) {
    const auto g = load_triples_file(triples);
    const auto& s = g.stats();
    std::cout << "entities  " << s.entities << "\n"
              << "relations " << s.relations << "\n"
              << "triples   " << s.triples << "\n"
              << "duplicates dropped " << s.duplicates << "\n";
    if (!dump_path.empty()) {
        std::ofstream out(dump_path);
        if (!out) throw Error(ErrorKind::Io, "cannot write " + dump_path);
        g.dump(out);
    }
    return 0;
}

int cmd_train(const std::string& config_path, const std::string& dataset_path, const std::string& out_path) {
    const auto cfg = load_config(config_path);
    const auto g = graph_from(cfg);
    const auto records = load_dataset_file(dataset_path);
    std::vector<LabeledQuestion> data;
    std::size_t skipped = 0;
    for (const auto& r : records) {
        std::optional<int> hops;
        try {
            hops = compute_min_hop(g, r.question_entities, r.answers);
        } catch (const Error& e) {
            spdlog::warn("record {}: {}", r.id, e.what());
        }
        if (!hops) {
            ++skipped;
            continue;
        }
        data.push_back(LabeledQuestion{r.question, label_query(*hops, cfg.delta).value});
    }
    if (skipped) spdlog::warn("{} record(s) without a connecting path were left out of training", skipped);
    const auto result = train(data, EncoderConfig{}, cfg.delta, cfg.train);
    save_model_file(result.model, out_path);
    std::size_t complex = 0;
    for (const auto& d : data) complex += d.label == Complexity::Complex;
    std::printf("trained on %zu questions (%zu simple, %zu complex)\n", data.size(), data.size() - complex, complex);
    std::printf("final loss %.6f, training accuracy %.4f\n", result.report.final_loss, result.report.accuracy);
    std::printf("model written to %s\n", out_path.c_str());
    return 0;
}

int cmd_answer(const std::string& config_path, const std::string& question, const std::vector<std::string>& entities,
               const std::vector<std::string>& answers, const std::string& route_flag, bool mock, bool feedback) {
    auto cfg = load_config(config_path);
    if (mock) cfg.mock_llm = true;
    const auto route = parse_route(route_flag);
    const auto g = graph_from(cfg);
    const auto model = maybe_model(cfg, route);

    DatasetRecord rec{"cli", question, entities, answers};
    auto bundle = make_services(cfg, std::span<const DatasetRecord>(&rec, 1));
    const auto outcome =
        run_query(g, model ? &*model : nullptr, cfg, rec, bundle.services(), QueryOptions{route, feedback});
    std::cout << to_json(outcome.trace).dump(2) << "\n";
    std::cout << "answer: " << outcome.answer.value_or("<none>") << "\n";
    if (outcome.trace.error_stage) return kExitRuntime;
    return 0;
}

int cmd_eval(const std::string& config_path, const std::string& dataset_path, bool mock, const std::string& route_flag,
             const std::string& report_path, const std::string& trace_path, std::size_t workers, bool timing,
             const std::string& model_out) {
    auto cfg = load_config(config_path);
    if (mock) cfg.mock_llm = true;
    if (workers > 0) cfg.workers = workers;
    const auto route = parse_route(route_flag);
    const auto g = graph_from(cfg);
    const auto model = maybe_model(cfg, route);
    const auto dataset = load_dataset_file(dataset_path);
    auto bundle = make_services(cfg, dataset);

    const auto result = evaluate(g, model ? &*model : nullptr, cfg, dataset, bundle.services(), EvalOptions{route});
    std::cout << format_table(result.report);
    if (!report_path.empty()) write_file(report_path, to_json(result.report, timing).dump(2) + "\n");
    if (!trace_path.empty()) {
        std::ofstream out(trace_path);
        if (!out) throw Error(ErrorKind::Io, "cannot write " + trace_path);
        for (const auto& t : result.traces) out << to_json(t).dump() << '\n';
    }
    if (!model_out.empty() && result.final_model) save_model_file(*result.final_model, model_out);
    return 0;
}

int cmd_adapt(const std::string& config_path, const std::string& feedback_path, const std::string& out_path) {
    const auto cfg = load_config(config_path);
    if (cfg.model_path.empty()) throw Error(ErrorKind::Config, "config has no 'model' to adapt");
    const auto model = load_model_file(cfg.model_path);

    std::ifstream in(feedback_path);
    if (!in) throw Error(ErrorKind::Io, "cannot open feedback file: " + feedback_path);
    std::vector<LabeledQuestion> feedback;
    std::string line;
    std::size_t line_no = 0;
    std::size_t skipped = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("question") || !j["question"].is_string())
            throw Error(ErrorKind::Parse, "feedback line " + std::to_string(line_no) + ": needs a question");
        std::optional<Complexity> label;
        if (j.contains("label") && j["label"].is_string()) {
            label = parse_complexity(j["label"].get<std::string>());
        } else if (j.contains("reply") && j["reply"].is_string()) {
            LlmResponse r;
            r.raw_text = j["reply"].get<std::string>();
            if (auto fb = parse_feedback(r, model.delta)) label = fb->value;
        }
        if (!label) {
            ++skipped;
            continue;
        }
        feedback.push_back(LabeledQuestion{j["question"].get<std::string>(), *label});
    }
    const auto before = mean_loss(model, feedback);
    const auto adapted = fast_adapt(model, feedback, cfg.adapt);
    save_model_file(adapted, out_path);
    std::printf("adapted on %zu feedback label(s) (%zu skipped); loss %.6f -> %.6f; version %llu\n", feedback.size(),
                skipped, before, mean_loss(adapted, feedback), static_cast<unsigned long long>(adapted.version));
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Knowledge-graph RAG with query-complexity routing"};
    app.require_subcommand(1);
    std::string log_level = "warn";
    app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off");

    std::string config, dataset, triples, out, question, route, report, trace, feedback_file, dump, model_out;
    std::vector<std::string> entities, answers;
    bool mock = false, feedback = false, timing = false;
    std::size_t workers = 0;

    auto* ingest = app.add_subcommand("ingest", "Load a triple file and print store statistics");
    ingest->add_option("--triples", triples, "TAB-separated triple file")->required();
    ingest->add_option("--dump", dump, "Write the deduplicated triples back out");

    auto* train_cmd = app.add_subcommand("train", "Label a dataset by min-hop and train the classifier");
    train_cmd->add_option("--config", config, "Pipeline config file")->required();
    train_cmd->add_option("--dataset", dataset, "JSONL dataset")->required();
    train_cmd->add_option("--out", out, "Model file to write")->required();

    auto* answer = app.add_subcommand("answer", "Answer one question and print its trace");
    answer->add_option("--config", config, "Pipeline config file")->required();
    answer->add_option("--question", question, "Question text")->required();
    answer->add_option("--entity", entities, "Question entity (repeatable)")->required();
    answer->add_option("--gold", answers, "Gold answer, used by the mock client and for scoring");
    answer->add_option("--force-route", route, "Skip the classifier: simple|complex")
        ->check(CLI::IsMember({"simple", "complex"}));
    answer->add_flag("--mock-llm", mock, "Use the offline mock client");
    answer->add_flag("--feedback", feedback, "Also issue the feedback prompt");

    auto* eval = app.add_subcommand("eval", "Evaluate Hits@1 over a dataset");
    eval->add_option("--config", config, "Pipeline config file")->required();
    eval->add_option("--dataset", dataset, "JSONL dataset")->required();
    eval->add_flag("--mock-llm", mock, "Use the offline mock client");
    eval->add_option("--force-route", route, "Skip the classifier: simple|complex")
        ->check(CLI::IsMember({"simple", "complex"}));
    eval->add_option("--report", report, "Write the report as JSON");
    eval->add_option("--trace", trace, "Write per-query traces as JSON lines");
    eval->add_option("--workers", workers, "Worker threads (overrides config)");
    eval->add_flag("--timing", timing, "Include wall-clock time in the JSON report");
    eval->add_option("--model-out", model_out, "Write the classifier after feedback adaptation");

    auto* adapt = app.add_subcommand("adapt", "Fine-tune the classifier on feedback labels");
    adapt->add_option("--config", config, "Pipeline config file")->required();
    adapt->add_option("--feedback", feedback_file, "JSONL with question and label (or reply)")->required();
    adapt->add_option("--out", out, "Model file to write")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        std::cerr << app.help();
        return kExitUsage;
    }

    spdlog::set_default_logger(spdlog::stderr_color_mt("kgrag"));
    spdlog::set_level(spdlog::level::from_str(log_level));

    try {
        if (ingest->parsed()) return cmd_ingest(triples, dump);
        if (train_cmd->parsed()) return cmd_train(config, dataset, out);
        if (answer->parsed()) return cmd_answer(config, question, entities, answers, route, mock, feedback);
        if (eval->parsed())
            return cmd_eval(config, dataset, mock, route, report, trace, workers, timing, model_out);
        if (adapt->parsed()) return cmd_adapt(config, feedback_file, out);
    } catch (const Error& e) {
        std::cerr << "error[" << to_string(e.kind()) << "]: " << e.what() << "\n";
        return kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error[internal]: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}
