#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "inoculate/analysis.hpp"
#include "inoculate/corpus.hpp"

namespace inoculate {

// Predictions file ----------------------------------------------------------

/// Predictions JSONL; every line is validated (argmax, prob sum). Throws
/// ParseError with the line number.
std::vector<Prediction> read_predictions(std::istream& in, const std::string& source);
std::vector<Prediction> load_predictions(const std::filesystem::path& path);
void write_predictions(std::span<const Prediction> predictions, std::ostream& out);
void write_predictions(std::span<const Prediction> predictions, const std::filesystem::path& path);

// Wire format ---------------------------------------------------------------
//
//   GET  /v1/health  -> {"model_id": "..."}
//   POST /v1/predict    {"pairs": [{"id", "premise", "hypothesis"}, ...]}
//                    -> {"model_id": "...", "predictions": [{"id", "label", "probs"}, ...]}

struct PredictItem {
    std::string id;
    std::string premise;
    std::string hypothesis;
    bool operator==(const PredictItem&) const = default;
};

struct PredictResponse {
    std::string model_id;
    std::vector<Prediction> predictions;
};

std::string encode_health_response(const std::string& model_id);
std::string decode_health_response(std::string_view body);
std::string encode_predict_request(std::span<const PredictItem> items);
std::string encode_predict_request(std::span<const SentencePair> pairs);
std::vector<PredictItem> decode_predict_request(std::string_view body);
std::string encode_predict_response(const std::string& model_id, std::span<const Prediction> predictions);
/// Validates every prediction, and requires probs. Throws ProtocolError.
PredictResponse decode_predict_response(std::string_view body);

// Cache ---------------------------------------------------------------------

/// (model_id, premise, hypothesis) -> prediction. Optionally backed by an
/// append-only JSONL file; reopening the file restores every entry, later
/// lines winning. Safe for concurrent lookup/store.
class PredictionCache {
public:
    PredictionCache() = default;
    explicit PredictionCache(const std::filesystem::path& path);

    std::optional<Prediction> lookup(const std::string& model_id, const std::string& premise,
                                     const std::string& hypothesis) const;
    void store(const std::string& model_id, const std::string& premise, const std::string& hypothesis,
               const Prediction& prediction);
    std::size_t size() const;

private:
    static std::string key(const std::string& model_id, const std::string& premise, const std::string& hypothesis);

    mutable std::mutex mutex_;
    std::unordered_map<std::string, Prediction> entries_;
    std::optional<std::ofstream> file_;
    std::filesystem::path path_;
};

// Client --------------------------------------------------------------------

struct ModelEndpoint {
    std::string base_url;  // e.g. http://127.0.0.1:8000
    std::string model_id;  // filled by health() when empty
    std::chrono::milliseconds timeout{30000};
    std::size_t max_in_flight = 4;
    std::size_t batch_size = 32;
    std::chrono::milliseconds retry_backoff{100};  // doubled per retry
    int attempts = 3;
};

class ModelClient {
public:
    /// Throws Error if batch_size or max_in_flight is zero.
    explicit ModelClient(ModelEndpoint endpoint);

    /// Returns (and remembers) the server's model id. Throws Error when the
    /// server is unreachable, ProtocolError on a bad answer.
    std::string health();

    /// One prediction per pair, in input order. Cached triples skip the
    /// network; fresh answers are stored. Batches of batch_size, at most
    /// max_in_flight in parallel, each retried on transport errors and 5xx.
    std::vector<Prediction> request_predictions(std::span<const SentencePair> pairs,
                                                PredictionCache* cache = nullptr);

    const ModelEndpoint& endpoint() const { return endpoint_; }
    std::size_t requests_sent() const { return requests_.load(); }
    std::size_t predict_requests() const { return predict_requests_.load(); }

private:
    std::vector<Prediction> send_batch(std::span<const PredictItem> items, std::size_t batch_index);

    ModelEndpoint endpoint_;
    std::string scheme_host_port_;
    std::string path_prefix_;
    std::atomic<std::size_t> requests_{0};
    std::atomic<std::size_t> predict_requests_{0};
};

}  // namespace inoculate
