#include <cstdio>
#include <unordered_set>

#include "commands.hpp"

namespace inoculate::cli {

void add_embedding_options(CLI::App& cmd, EmbeddingOptions& opts, bool glove_required) {
    auto* g = cmd.add_option("--glove", opts.glove, "GloVe-format text embeddings")->check(CLI::ExistingFile);
    if (glove_required) g->required();
    cmd.add_option("--dim", opts.dim, "expected embedding dimension (default: first line's)");
    cmd.add_option("--stopwords", opts.stopwords, "stop-word list, one token per line (default: built-in en-v1)")
        ->check(CLI::ExistingFile);
}

StopWordList load_stopwords(const EmbeddingOptions& opts, RunManifest* manifest) {
    if (opts.stopwords.empty()) return StopWordList::builtin();
    if (manifest) manifest->add_input(opts.stopwords);
    const auto digest = sha256_file(opts.stopwords);
    return StopWordList::load(opts.stopwords, "file:" + digest.substr(0, 12));
}

EmbeddingTable<float> load_table(const EmbeddingOptions& opts, RunManifest* manifest) {
    if (manifest) manifest->add_input(opts.glove);
    return load_glove<float>(opts.glove, opts.dim);
}

void add_model_options(CLI::App& cmd, ModelOptions& opts) {
    auto* ep = cmd.add_option("--endpoint", opts.endpoint, "model server base URL");
    auto* pf = cmd.add_option("--predictions", opts.predictions, "predictions JSONL")->check(CLI::ExistingFile);
    ep->excludes(pf);
    pf->excludes(ep);
    cmd.add_option("--model-id", opts.model_id, "expected model id (skips the health call)");
    cmd.add_option("--cache", opts.cache, "prediction cache JSONL");
    cmd.add_option("--batch-size", opts.batch_size, "pairs per request")->capture_default_str()->check(CLI::PositiveNumber);
    cmd.add_option("--max-in-flight", opts.max_in_flight, "concurrent requests")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    cmd.add_option("--timeout-ms", opts.timeout_ms, "per-request timeout")->capture_default_str();
}

std::vector<Prediction> obtain_predictions(const ModelOptions& opts, std::span<const SentencePair> pairs,
                                           RunManifest& manifest, std::ostream& err) {
    if (!opts.predictions.empty()) {
        manifest.add_input(opts.predictions);
        return load_predictions(opts.predictions);
    }
    if (opts.endpoint.empty()) throw UsageError("one of --endpoint or --predictions is required");
    ModelEndpoint endpoint;
    endpoint.base_url = opts.endpoint;
    endpoint.model_id = opts.model_id;
    endpoint.batch_size = opts.batch_size;
    endpoint.max_in_flight = opts.max_in_flight;
    endpoint.timeout = std::chrono::milliseconds(opts.timeout_ms);
    ModelClient client(endpoint);
    std::optional<PredictionCache> cache;
    if (!opts.cache.empty()) cache.emplace(opts.cache);
    auto preds = client.request_predictions(pairs, cache ? &*cache : nullptr);
    manifest.config["model_id"] = client.endpoint().model_id;
    manifest.config["endpoint"] = opts.endpoint;
    err << "model " << client.endpoint().model_id << ": " << client.predict_requests() << " predict request(s)\n";
    return preds;
}

std::vector<Prediction> restrict_to(std::span<const Prediction> predictions, const Dataset& dataset) {
    std::unordered_set<std::string> ids;
    for (const auto& p : dataset.pairs) ids.insert(p.id);
    std::vector<Prediction> out;
    for (const auto& p : predictions)
        if (ids.count(p.id)) out.push_back(p);
    return out;
}

std::filesystem::path manifest_path(const std::filesystem::path& artifact) {
    auto p = artifact;
    p += ".manifest.jsonl";
    return p;
}

void ensure_parent(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
}

std::string format_pct(std::optional<double> v) {
    if (!v) return "-";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", *v);
    return buf;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"NLI robustness toolkit: similarity analysis, challenge sets, mixtures and ablations", "inoculate"};
    app.set_version_flag("--version", INOCULATE_VERSION);
    app.require_subcommand(1);
    Streams io{out, err};

    std::vector<std::pair<CLI::App*, Action>> actions;
    auto reg = [&](Action (*add)(CLI::App&, Streams)) {
        const auto before = app.get_subcommands({}).size();
        auto action = add(app, io);
        actions.emplace_back(app.get_subcommands({}).at(before), std::move(action));
    };
    reg(add_ingest);
    reg(add_analyze);
    reg(add_perturb);
    reg(add_mix);
    reg(add_eval);
    reg(add_ablate);
    reg(add_serve);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::CallForVersion&) {
        out << INOCULATE_VERSION << '\n';
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "inoculate: " << e.what() << '\n';
        return kUsage;
    }

    for (auto& [sub, action] : actions) {
        if (!sub->parsed()) continue;
        try {
            return action();
        } catch (const UsageError& e) {
            err << "inoculate " << sub->get_name() << ": " << e.what() << '\n';
            return kUsage;
        } catch (const std::exception& e) {
            err << "inoculate " << sub->get_name() << ": error: " << e.what() << '\n';
            return kFailure;
        }
    }
    return kUsage;
}

}  // namespace inoculate::cli
