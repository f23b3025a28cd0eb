#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "inoculate/analysis.hpp"
#include "inoculate/cli.hpp"
#include "inoculate/embedding.hpp"
#include "inoculate/manifest.hpp"
#include "inoculate/modelgate.hpp"

namespace inoculate::cli {

struct Streams {
    std::ostream& out;
    std::ostream& err;
};

// Each registers one subcommand; the returned action runs it after parsing.
using Action = std::function<int()>;

Action add_ingest(CLI::App& app, Streams io);
Action add_analyze(CLI::App& app, Streams io);
Action add_perturb(CLI::App& app, Streams io);
Action add_mix(CLI::App& app, Streams io);
Action add_eval(CLI::App& app, Streams io);
Action add_ablate(CLI::App& app, Streams io);
Action add_serve(CLI::App& app, Streams io);

// Thrown for option combinations CLI11 cannot express; exits with kUsage.
struct UsageError : Error {
    using Error::Error;
};

struct EmbeddingOptions {
    std::string glove;
    std::optional<std::size_t> dim;
    std::string stopwords;
};

void add_embedding_options(CLI::App& cmd, EmbeddingOptions& opts, bool glove_required);
StopWordList load_stopwords(const EmbeddingOptions& opts, RunManifest* manifest);
EmbeddingTable<float> load_table(const EmbeddingOptions& opts, RunManifest* manifest);

struct ModelOptions {
    std::string endpoint;
    std::string predictions;
    std::string model_id;
    std::string cache;
    std::size_t batch_size = 32;
    std::size_t max_in_flight = 4;
    long timeout_ms = 30000;
};

/// --endpoint URL | --predictions FILE plus client tuning flags.
void add_model_options(CLI::App& cmd, ModelOptions& opts);
/// Predictions for `pairs`: read from the file, or requested from the
/// endpoint (through the cache when configured).
std::vector<Prediction> obtain_predictions(const ModelOptions& opts, std::span<const SentencePair> pairs,
                                           RunManifest& manifest, std::ostream& err);

/// The predictions whose id belongs to `dataset`, in file order.
std::vector<Prediction> restrict_to(std::span<const Prediction> predictions, const Dataset& dataset);

/// `<artifact>.manifest.jsonl` next to the artifact.
std::filesystem::path manifest_path(const std::filesystem::path& artifact);
void ensure_parent(const std::filesystem::path& path);

std::string format_pct(std::optional<double> v);

}  // namespace inoculate::cli
