#include "inoculate/workbench.hpp"

#include <fstream>

#include <httplib.h>

#include "inoculate/error.hpp"

namespace inoculate {

namespace {

Json or_null(const std::optional<std::string>& s) { return s ? Json(*s) : Json(nullptr); }

std::string required_text(const Json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_string()) throw Error(std::string("'") + key + "' must be a string");
    auto s = it->get<std::string>();
    if (s.find_first_not_of(" \t\r\n") == std::string::npos) throw Error(std::string("'") + key + "' is empty");
    return s;
}

}  // namespace

Json to_json(const ProbeResult& r) {
    Json j;
    j["prediction"] = r.prediction ? Json(std::string(to_string(*r.prediction))) : Json(nullptr);
    j["probs"] = r.probs ? Json::array({(*r.probs)[0], (*r.probs)[1], (*r.probs)[2]}) : Json(nullptr);
    j["similarity"] = r.similarity ? Json(*r.similarity) : Json(nullptr);
    j["degraded"] = r.degraded;
    if (!r.detail.empty()) j["detail"] = r.detail;
    return j;
}

CommitRequest commit_request_from_json(const Json& body) {
    if (!body.is_object()) throw Error("commit body must be a JSON object");
    auto pair = body.find("pair");
    if (pair == body.end() || !pair->is_object()) throw Error("'pair' must be an object");
    CommitRequest r;
    r.premise = required_text(*pair, "premise");
    r.hypothesis = required_text(*pair, "hypothesis");
    if (auto label = pair->find("label"); label != pair->end() && !label->is_null()) {
        std::optional<Label> l;
        if (label->is_string()) l = try_parse_label(label->get<std::string>());
        if (label->is_number_integer() && label->get<int>() == code(Label::contradiction)) l = Label::contradiction;
        if (l != Label::contradiction) throw Error("workbench pairs keep gold label contradiction");
    }
    r.store = required_text(body, "store");
    if (std::find(kStoreNames.begin(), kStoreNames.end(), r.store) == kStoreNames.end())
        throw Error("unknown store '" + r.store + "' (expected challenge or train)");
    auto tag = body.find("rule_tag");
    if (tag == body.end() || !tag->is_string() || tag->get<std::string>().empty())
        throw Error("'rule_tag' is required");
    r.rule_tag = tag->get<std::string>();
    if (!is_cataloged_rule(r.rule_tag)) throw Error("unknown rule tag '" + r.rule_tag + "'");
    if (auto src = body.find("source_id"); src != body.end() && !src->is_null()) {
        if (!src->is_string()) throw Error("'source_id' must be a string or null");
        if (!src->get<std::string>().empty()) r.source_id = src->get<std::string>();
    }
    return r;
}

// --- service ------------------------------------------------------------------

WorkbenchService::WorkbenchService(WorkbenchOptions options) : options_(std::move(options)) {
    std::filesystem::create_directories(options_.store_dir);
    for (auto name : kStoreNames) {
        auto store = std::make_unique<Store>();
        const auto path = store_path(name);
        if (std::filesystem::exists(path)) {
            auto existing = load_jsonl(path, std::string(name));
            for (const auto& p : existing.pairs) {
                store->ids.insert(p.id);
                ++store->labels[code(p.gold)];
            }
            store->size = existing.size();
            store->next = existing.size() + 1;
        }
        stores_.emplace(std::string(name), std::move(store));
    }
    if (options_.endpoint) client_ = std::make_unique<ModelClient>(*options_.endpoint);
}

std::filesystem::path WorkbenchService::store_path(std::string_view store) const {
    return options_.store_dir / (std::string(store) + ".jsonl");
}

std::optional<Prediction> WorkbenchService::predict(const std::string& premise, const std::string& hypothesis,
                                                    std::string& detail) {
    if (!client_) {
        detail = "no model endpoint configured";
        return std::nullopt;
    }
    try {
        SentencePair pair{"probe", premise, hypothesis, Label::contradiction, OriginalProvenance{"workbench"}};
        auto preds = client_->request_predictions(std::span<const SentencePair>(&pair, 1), &cache_);
        return preds.front();
    } catch (const std::exception& e) {
        detail = std::string("model unavailable: ") + e.what();
        return std::nullopt;
    }
}

ProbeResult WorkbenchService::probe(const std::string& premise, const std::string& hypothesis) {
    ProbeResult r;
    if (options_.table) {
        SentencePair pair{"probe", premise, hypothesis, Label::contradiction, OriginalProvenance{"workbench"}};
        r.similarity = pair_similarity(*options_.table, pair, options_.stops);
    }
    if (auto pred = predict(premise, hypothesis, r.detail)) {
        r.prediction = pred->label;
        r.probs = pred->probs;
        r.degraded = false;
    }
    return r;
}

std::string WorkbenchService::commit(const CommitRequest& request) {
    auto it = stores_.find(request.store);
    if (it == stores_.end()) throw Error("unknown store '" + request.store + "'");
    Store& store = *it->second;
    std::lock_guard lock(store.mutex);

    std::string id;
    do {
        id = request.store + "-" + std::to_string(store.next++);
    } while (store.ids.count(id));

    SentencePair pair{id, request.premise, request.hypothesis, Label::contradiction, OriginalProvenance{"workbench"}};
    if (request.source_id) pair.provenance = PerturbedProvenance{request.rule_tag, *request.source_id, false};
    validate_pair(pair);

    const auto path = store_path(request.store);
    std::ofstream out(path, std::ios::binary | std::ios::app);
    if (!out) throw IoError(path.string(), "cannot open store for appending");
    out << to_json(pair).dump() << '\n';
    out.flush();
    if (!out) throw IoError(path.string(), "store append failed");

    store.ids.insert(id);
    ++store.labels[code(Label::contradiction)];
    ++store.size;
    return id;
}

std::vector<StoreSummary> WorkbenchService::stores() const {
    std::vector<StoreSummary> out;
    for (const auto& [name, store] : stores_) {
        std::lock_guard lock(store->mutex);
        out.push_back({name, store->size, store->labels});
    }
    return out;
}

Json WorkbenchService::health() {
    Json j;
    std::optional<std::string> model_id;
    std::string detail;
    if (client_) {
        try {
            model_id = client_->health();
        } catch (const std::exception& e) {
            detail = e.what();
        }
    } else {
        detail = "no model endpoint configured";
    }
    j["model_id"] = or_null(model_id);
    j["degraded"] = !model_id.has_value();
    j["embedding"] = options_.table ? Json(options_.table->source()) : Json(nullptr);
    if (!detail.empty()) j["detail"] = detail;
    return j;
}

// --- HTTP ---------------------------------------------------------------------

namespace {

void reply(httplib::Response& res, int status, const Json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

template <typename F>
void guarded(httplib::Response& res, F&& f) {
    try {
        f();
    } catch (const Json::exception& e) {
        reply(res, 400, Json{{"error", std::string("malformed JSON: ") + e.what()}});
    } catch (const IoError& e) {
        reply(res, 500, Json{{"error", e.what()}});
    } catch (const Error& e) {
        reply(res, 400, Json{{"error", e.what()}});
    }
}

}  // namespace

WorkbenchServer::WorkbenchServer(WorkbenchService& service)
    : service_(service), server_(std::make_unique<httplib::Server>()) {
    auto& srv = *server_;
    // httplib's default adds SO_REUSEPORT, which would let a second server
    // share a busy port silently.
    srv.set_socket_options([](socket_t sock) {
        int yes = 1;
        setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
    });
    srv.Post("/api/probe", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            auto body = Json::parse(req.body);
            if (!body.is_object()) throw Error("probe body must be a JSON object");
            reply(res, 200,
                  to_json(service_.probe(required_text(body, "premise"), required_text(body, "hypothesis"))));
        });
    });
    srv.Post("/api/commit", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            auto id = service_.commit(commit_request_from_json(Json::parse(req.body)));
            reply(res, 200, Json{{"id", id}});
        });
    });
    srv.Get("/api/stores", [this](const httplib::Request&, httplib::Response& res) {
        Json stores = Json::array();
        for (const auto& s : service_.stores()) {
            Json labels;
            for (auto l : kAllLabels) labels[std::string(to_string(l))] = s.labels[code(l)];
            stores.push_back(Json{{"name", s.name}, {"size", s.size}, {"labels", std::move(labels)}});
        }
        reply(res, 200, Json{{"stores", std::move(stores)}});
    });
    srv.Get("/api/health", [this](const httplib::Request&, httplib::Response& res) {
        reply(res, 200, service_.health());
    });
}

WorkbenchServer::~WorkbenchServer() { stop(); }

int WorkbenchServer::start(const std::string& host, int port) {
    int bound = port;
    if (port == 0) {
        bound = server_->bind_to_any_port(host);
    } else if (!server_->bind_to_port(host, port)) {
        bound = -1;
    }
    if (bound <= 0) throw Error("cannot bind " + host + ":" + std::to_string(port) + " (port busy?)");
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    return bound;
}

void WorkbenchServer::wait() {
    if (thread_.joinable()) thread_.join();
}

void WorkbenchServer::stop() {
    if (server_) server_->stop();
    if (thread_.joinable()) thread_.join();
}

}  // namespace inoculate
