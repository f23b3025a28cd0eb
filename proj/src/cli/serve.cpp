#include <csignal>
#include <pthread.h>

#include "commands.hpp"
#include "inoculate/workbench.hpp"

namespace inoculate::cli {

namespace {

struct ServeOptions {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string stores = "stores";
    EmbeddingOptions embedding;
    ModelOptions model;
};

}  // namespace

Action add_serve(CLI::App& app, Streams io) {
    auto opts = std::make_shared<ServeOptions>();
    auto* cmd = app.add_subcommand("serve", "Run the authoring workbench backend");
    cmd->add_option("--host", opts->host, "bind address")->capture_default_str();
    cmd->add_option("--port", opts->port, "port (0 picks a free one)")->capture_default_str();
    cmd->add_option("--stores", opts->stores, "directory of challenge/train store files")->capture_default_str();
    add_embedding_options(*cmd, opts->embedding, false);
    cmd->add_option("--endpoint", opts->model.endpoint, "model server base URL (omit for similarity-only mode)");
    cmd->add_option("--model-id", opts->model.model_id, "expected model id");
    cmd->add_option("--timeout-ms", opts->model.timeout_ms, "model request timeout")->capture_default_str();

    return [opts, io] {
        WorkbenchOptions wopts;
        wopts.store_dir = opts->stores;
        if (!opts->embedding.glove.empty()) {
            wopts.table = std::make_shared<const EmbeddingTable<float>>(load_table(opts->embedding, nullptr));
            wopts.stops = load_stopwords(opts->embedding, nullptr);
        }
        if (!opts->model.endpoint.empty()) {
            ModelEndpoint ep;
            ep.base_url = opts->model.endpoint;
            ep.model_id = opts->model.model_id;
            ep.timeout = std::chrono::milliseconds(opts->model.timeout_ms);
            ep.batch_size = 1;
            ep.max_in_flight = 1;
            wopts.endpoint = ep;
        }

        // Block the stop signals before any server thread exists so only
        // sigwait below sees them.
        sigset_t stop_signals;
        sigemptyset(&stop_signals);
        sigaddset(&stop_signals, SIGINT);
        sigaddset(&stop_signals, SIGTERM);
        pthread_sigmask(SIG_BLOCK, &stop_signals, nullptr);

        WorkbenchService service(std::move(wopts));
        WorkbenchServer server(service);
        const int port = server.start(opts->host, opts->port);
        const auto health = service.health();
        io.out << "workbench backend on http://" << opts->host << ':' << port << " (stores in " << opts->stores
               << ", " << (health["degraded"].get<bool>() ? "degraded: similarity only" : "model connected") << ")"
               << std::endl;

        int sig = 0;
        sigwait(&stop_signals, &sig);
        server.stop();
        pthread_sigmask(SIG_UNBLOCK, &stop_signals, nullptr);
        io.err << "stopped on signal " << sig << '\n';
        return kOk;
    };
}

}  // namespace inoculate::cli
