#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <unordered_set>
#include <vector>

#include "inoculate/analysis.hpp"
#include "inoculate/embedding.hpp"
#include "inoculate/modelgate.hpp"

namespace httplib {
class Server;
}

namespace inoculate {

// Backend for the authoring workbench:
//
//   POST /api/probe   {premise, hypothesis}
//                  -> {prediction|null, probs|null, similarity|null, degraded}
//   POST /api/commit  {pair, store: "challenge"|"train", rule_tag, source_id|null} -> {id}
//   GET  /api/stores  -> {"stores": [{name, size, labels: {entailment, neutral, contradiction}}]}
//   GET  /api/health  -> {model_id|null, degraded, embedding}

struct ProbeResult {
    std::optional<Label> prediction;
    std::optional<LabelProbs> probs;
    std::optional<double> similarity;
    bool degraded = true;
    std::string detail;  // why the model part is missing, empty otherwise
};

Json to_json(const ProbeResult& r);

struct CommitRequest {
    std::string premise;
    std::string hypothesis;
    std::string store;
    std::string rule_tag;
    std::optional<std::string> source_id;
};

/// Throws Error on a missing field, a non-contradiction label, an unknown
/// store or an uncataloged rule tag.
CommitRequest commit_request_from_json(const Json& body);

struct StoreSummary {
    std::string name;
    std::size_t size = 0;
    LabelCounts labels{};
};

inline constexpr std::array<std::string_view, 2> kStoreNames = {"challenge", "train"};

struct WorkbenchOptions {
    std::filesystem::path store_dir;
    std::optional<ModelEndpoint> endpoint;
    std::shared_ptr<const EmbeddingTable<float>> table;
    StopWordList stops = StopWordList::builtin();
};

class WorkbenchService {
public:
    /// Loads existing store files from store_dir (creating the directory).
    explicit WorkbenchService(WorkbenchOptions options);

    ProbeResult probe(const std::string& premise, const std::string& hypothesis);
    /// Appends the pair to its store file and returns the new id.
    std::string commit(const CommitRequest& request);
    std::vector<StoreSummary> stores() const;
    Json health();

    std::filesystem::path store_path(std::string_view store) const;

private:
    struct Store {
        std::mutex mutex;
        std::size_t next = 1;
        std::unordered_set<std::string> ids;
        LabelCounts labels{};
        std::size_t size = 0;
    };

    std::optional<Prediction> predict(const std::string& premise, const std::string& hypothesis,
                                      std::string& detail);

    WorkbenchOptions options_;
    std::unique_ptr<ModelClient> client_;
    PredictionCache cache_;
    std::map<std::string, std::unique_ptr<Store>, std::less<>> stores_;
};

/// HTTP front end over a WorkbenchService, served from a background thread.
class WorkbenchServer {
public:
    explicit WorkbenchServer(WorkbenchService& service);
    ~WorkbenchServer();
    WorkbenchServer(const WorkbenchServer&) = delete;
    WorkbenchServer& operator=(const WorkbenchServer&) = delete;

    /// Binds host:port (port 0 picks a free one) and starts serving. Returns
    /// the bound port. Throws Error when the port is busy.
    int start(const std::string& host, int port);
    /// Blocks until stop() is called from elsewhere.
    void wait();
    void stop();

private:
    WorkbenchService& service_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
};

}  // namespace inoculate
