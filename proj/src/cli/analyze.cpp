#include <fstream>

#include "commands.hpp"

namespace inoculate::cli {

namespace {

struct AnalyzeOptions {
    std::string pairs;
    EmbeddingOptions embedding;
    ModelOptions model;
    double lo = 0.5;
    double hi = 1.0;
    double bin = 0.05;
    double threshold = 0.8;
    double step = 0.01;
    std::string out_dir = "analysis";
};

template <typename Write>
std::string write_csv(const std::filesystem::path& dir, const char* name, Write&& write) {
    const auto path = dir / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path.string(), "cannot open for writing");
    write(out);
    if (!out) throw IoError(path.string(), "write failed");
    return path.string();
}

}  // namespace

Action add_analyze(CLI::App& app, Streams io) {
    auto opts = std::make_shared<AnalyzeOptions>();
    auto* cmd = app.add_subcommand("analyze", "Accuracy by premise/hypothesis similarity, chart CSVs and a report");
    cmd->add_option("--pairs", opts->pairs, "pairs JSONL")->required()->check(CLI::ExistingFile);
    add_embedding_options(*cmd, opts->embedding, true);
    add_model_options(*cmd, opts->model);
    cmd->add_option("--lo", opts->lo, "lowest similarity bin edge")->capture_default_str();
    cmd->add_option("--hi", opts->hi, "highest similarity bin edge")->capture_default_str();
    cmd->add_option("--bin", opts->bin, "bin width")->capture_default_str();
    cmd->add_option("--threshold", opts->threshold, "similar-subset threshold (strict >)")->capture_default_str();
    cmd->add_option("--step", opts->step, "cumulative curve threshold step")->capture_default_str();
    cmd->add_option("--out-dir", opts->out_dir, "output directory")->capture_default_str();

    return [opts, io] {
        RunManifest manifest;
        manifest.command = "analyze";
        manifest.add_input(opts->pairs);
        const auto dataset = load_jsonl(opts->pairs);
        const auto stops = load_stopwords(opts->embedding, &manifest);
        const auto table = load_table(opts->embedding, &manifest);
        const auto preds = obtain_predictions(opts->model, dataset.pairs, manifest, io.err);

        const double accuracy = evaluate(dataset, preds);
        const auto joined = join(dataset, preds, table, stops);
        const auto strat = stratified_curve(joined.records, opts->lo, opts->hi, opts->bin);
        const auto cum = cumulative_curve(joined.records, opts->threshold, opts->step);
        const auto subset = subset_accuracy(joined.records, Label::contradiction, opts->threshold);

        EvalReport report;
        report.snli_test_acc = accuracy;
        report.similar_contra_acc = subset.percent;
        report.similar_contra_size = subset.subset_size;
        report.degenerate_count = joined.degenerate_count;
        report.threshold = opts->threshold;
        report.stopwords_version = stops.version();
        report.sets.push_back({dataset.name, dataset.size(), accuracy, label_distribution(preds)});

        const std::filesystem::path dir(opts->out_dir);
        std::filesystem::create_directories(dir);
        auto report_json = to_json(report);
        report_json["degenerate_ids"] = joined.degenerate_ids;
        report_json["below_range"] = strat.below_range;
        report_json["above_range"] = strat.above_range;
        manifest.artifacts.push_back(write_csv(dir, "report.json", [&](std::ostream& o) {
            o << report_json.dump(2) << '\n';
        }));
        manifest.artifacts.push_back(
            write_csv(dir, "stratified.csv", [&](std::ostream& o) { write_chart_csv(strat, o); }));
        manifest.artifacts.push_back(
            write_csv(dir, "cumulative.csv", [&](std::ostream& o) { write_chart_csv(cum, o); }));
        manifest.artifacts.push_back(write_csv(dir, "predicted_labels.csv", [&](std::ostream& o) {
            write_chart_csv(label_distribution(preds), o);
        }));
        manifest.artifacts.push_back(write_csv(dir, "gold_labels.csv", [&](std::ostream& o) {
            write_chart_csv(gold_distribution(dataset), o);
        }));

        manifest.config["pairs"] = opts->pairs;
        manifest.config["lo"] = opts->lo;
        manifest.config["hi"] = opts->hi;
        manifest.config["bin"] = opts->bin;
        manifest.config["threshold"] = opts->threshold;
        manifest.config["step"] = opts->step;
        manifest.config["stopwords_version"] = stops.version();
        manifest.config["out_dir"] = opts->out_dir;
        write_manifest(manifest, dir / "analyze.manifest.jsonl");

        io.out << "accuracy " << format_pct(accuracy) << "% over " << dataset.size() << " pairs\n"
               << "contradictions with similarity > " << opts->threshold << ": " << subset.subset_size
               << " pairs, accuracy " << format_pct(subset.percent) << "%\n"
               << "degenerate pairs: " << joined.degenerate_count << '\n';
        return kOk;
    };
}

}  // namespace inoculate::cli
