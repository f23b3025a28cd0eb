#include <fstream>
#include <unordered_set>

#include "commands.hpp"

namespace inoculate::cli {

namespace {

struct EvalOptions {
    std::string snli_test;
    std::string challenge;
    EmbeddingOptions embedding;
    ModelOptions model;
    double threshold = 0.8;
    std::string out = "eval_report.json";
    std::string save_predictions;
};

}  // namespace

Action add_eval(CLI::App& app, Streams io) {
    auto opts = std::make_shared<EvalOptions>();
    auto* cmd = app.add_subcommand("eval", "Score a model on the SNLI test set, its similar-contradiction subset "
                                           "and a challenge set");
    cmd->add_option("--snli-test", opts->snli_test, "SNLI test pairs JSONL")->required()->check(CLI::ExistingFile);
    cmd->add_option("--challenge", opts->challenge, "challenge set JSONL")->check(CLI::ExistingFile);
    add_embedding_options(*cmd, opts->embedding, false);
    add_model_options(*cmd, opts->model);
    cmd->add_option("--threshold", opts->threshold, "similar-subset threshold (strict >)")->capture_default_str();
    cmd->add_option("--out", opts->out, "report JSON")->capture_default_str();
    cmd->add_option("--save-predictions", opts->save_predictions, "write the predictions used to this JSONL");

    return [opts, io] {
        RunManifest manifest;
        manifest.command = "eval";
        const auto test = load_jsonl(opts->snli_test);
        manifest.add_input(opts->snli_test);
        std::optional<Dataset> challenge;
        if (!opts->challenge.empty()) {
            challenge = load_jsonl(opts->challenge);
            manifest.add_input(opts->challenge);
        }

        std::vector<SentencePair> all = test.pairs;
        if (challenge) all.insert(all.end(), challenge->pairs.begin(), challenge->pairs.end());
        index_by_id(Dataset{"eval", all});  // ids must be distinct across the two sets
        const auto preds = obtain_predictions(opts->model, all, manifest, io.err);
        {
            std::unordered_set<std::string> known;
            for (const auto& p : all) known.insert(p.id);
            std::string unknown;
            for (const auto& p : preds)
                if (!known.count(p.id)) unknown += " " + p.id;
            if (!unknown.empty()) throw Error("predictions for ids in neither set:" + unknown);
        }

        EvalReport report;
        report.threshold = opts->threshold;
        const auto test_preds = restrict_to(preds, test);
        report.snli_test_acc = evaluate(test, test_preds);
        report.sets.push_back({test.name, test.size(), *report.snli_test_acc, label_distribution(test_preds)});
        if (!opts->embedding.glove.empty()) {
            const auto stops = load_stopwords(opts->embedding, &manifest);
            const auto table = load_table(opts->embedding, &manifest);
            const auto joined = join(test, test_preds, table, stops);
            const auto subset = subset_accuracy(joined.records, Label::contradiction, opts->threshold);
            report.similar_contra_acc = subset.percent;
            report.similar_contra_size = subset.subset_size;
            report.degenerate_count = joined.degenerate_count;
            report.stopwords_version = stops.version();
        }
        if (challenge) {
            const auto ch_preds = restrict_to(preds, *challenge);
            report.challenge_acc = evaluate(*challenge, ch_preds);
            report.sets.push_back(
                {challenge->name, challenge->size(), *report.challenge_acc, label_distribution(ch_preds)});
        }

        const std::filesystem::path out(opts->out);
        ensure_parent(out);
        {
            std::ofstream f(out, std::ios::binary | std::ios::trunc);
            if (!f) throw IoError(out.string(), "cannot open for writing");
            f << to_json(report).dump(2) << '\n';
        }
        manifest.artifacts.push_back(out.string());
        if (!opts->save_predictions.empty()) {
            ensure_parent(opts->save_predictions);
            write_predictions(std::span<const Prediction>(preds), std::filesystem::path(opts->save_predictions));
            manifest.artifacts.push_back(opts->save_predictions);
        }
        manifest.config["threshold"] = opts->threshold;
        manifest.config["snli_test"] = opts->snli_test;
        manifest.config["challenge"] = opts->challenge;
        write_manifest(manifest, manifest_path(out));

        io.out << "SNLI test " << format_pct(report.snli_test_acc) << "  SNLI contra "
               << format_pct(report.similar_contra_acc) << " (" << report.similar_contra_size << " pairs)"
               << "  challenge " << format_pct(report.challenge_acc) << '\n';
        return kOk;
    };
}

}  // namespace inoculate::cli
