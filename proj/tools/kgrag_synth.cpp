// kgrag-synth: write a generated KGQA benchmark (triples, train/test splits,
// config) for trying the kgrag CLI without external data.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "kgrag/error.hpp"
#include "kgrag/pipeline.hpp"
#include "kgrag/synthetic.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Generate a synthetic KGQA benchmark"};
    std::string out_dir;
    kgrag::synth::Params params;
    std::size_t train_per_hop = 250;
    app.add_option("--out-dir", out_dir, "Directory to write into")->required();
    app.add_option("--entities", params.entities, "Background entities");
    app.add_option("--background-triples", params.background_triples, "Random background triples");
    app.add_option("--relations", params.relation_count, "Relation vocabulary size");
    app.add_option("--per-hop", params.queries_per_hop, "Test questions per hop count (1..4)");
    app.add_option("--train-per-hop", train_per_hop, "Training questions per hop count");
    app.add_option("--seed", params.seed, "RNG seed");
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        const auto test_per_hop = params.queries_per_hop;
        params.queries_per_hop = test_per_hop + train_per_hop;
        auto bench = kgrag::synth::generate(params);
        std::filesystem::create_directories(out_dir);
        const std::filesystem::path dir(out_dir);

        std::ofstream triples(dir / "triples.tsv");
        for (const auto& t : bench.triples) triples << t.subject << '\t' << t.relation << '\t' << t.object << '\n';

        // Records are interleaved by hop, so a prefix split stays balanced.
        const auto split = train_per_hop * static_cast<std::size_t>(params.max_hop);
        std::span<const kgrag::DatasetRecord> all(bench.records);
        std::ofstream train(dir / "train.jsonl");
        kgrag::write_dataset(train, all.subspan(0, split));
        std::ofstream test(dir / "test.jsonl");
        kgrag::write_dataset(test, all.subspan(split));

        kgrag::PipelineConfig cfg;
        cfg.triples_path = "triples.tsv";
        cfg.model_path = "model.txt";
        cfg.mock_llm = true;
        std::ofstream config(dir / "config.cfg");
        config << "# generated by kgrag-synth\n" << kgrag::dump_config(cfg);

        std::cout << "wrote " << bench.triples.size() << " triples, " << split << " training and "
                  << bench.records.size() - split << " test questions to " << out_dir << "\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
