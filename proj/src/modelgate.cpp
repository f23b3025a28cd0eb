#include "inoculate/modelgate.hpp"

#include <algorithm>
#include <exception>
#include <istream>
#include <ostream>
#include <thread>

#include <httplib.h>

#include "inoculate/error.hpp"

namespace inoculate {

// --- predictions file -------------------------------------------------------

std::vector<Prediction> read_predictions(std::istream& in, const std::string& source) {
    std::vector<Prediction> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(prediction_from_json(Json::parse(line)));
        } catch (const Json::exception& e) {
            throw ParseError(source, lineno, std::string("malformed JSON: ") + e.what());
        } catch (const Error& e) {
            throw ParseError(source, lineno, e.what());
        }
    }
    return out;
}

std::vector<Prediction> load_predictions(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path.string(), "cannot open predictions file");
    return read_predictions(in, path.string());
}

void write_predictions(std::span<const Prediction> predictions, std::ostream& out) {
    for (const auto& p : predictions) out << to_json(p).dump() << '\n';
}

void write_predictions(std::span<const Prediction> predictions, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path.string(), "cannot open for writing");
    write_predictions(predictions, out);
    if (!out) throw IoError(path.string(), "write failed");
}

// --- wire format --------------------------------------------------------------

namespace {

Json parse_body(std::string_view body, const char* what) {
    try {
        return Json::parse(body);
    } catch (const Json::exception& e) {
        throw ProtocolError(std::string(what) + ": malformed JSON: " + e.what());
    }
}

}  // namespace

std::string encode_health_response(const std::string& model_id) {
    Json j;
    j["model_id"] = model_id;
    return j.dump();
}

std::string decode_health_response(std::string_view body) {
    auto j = parse_body(body, "health");
    if (!j.is_object() || !j.contains("model_id") || !j["model_id"].is_string())
        throw ProtocolError("health: response lacks a string model_id");
    return j["model_id"].get<std::string>();
}

std::string encode_predict_request(std::span<const PredictItem> items) {
    Json pairs = Json::array();
    for (const auto& it : items) {
        Json p;
        p["id"] = it.id;
        p["premise"] = it.premise;
        p["hypothesis"] = it.hypothesis;
        pairs.push_back(std::move(p));
    }
    Json j;
    j["pairs"] = std::move(pairs);
    return j.dump();
}

std::string encode_predict_request(std::span<const SentencePair> pairs) {
    std::vector<PredictItem> items;
    items.reserve(pairs.size());
    for (const auto& p : pairs) items.push_back({p.id, p.premise, p.hypothesis});
    return encode_predict_request(std::span<const PredictItem>(items));
}

std::vector<PredictItem> decode_predict_request(std::string_view body) {
    auto j = parse_body(body, "predict request");
    if (!j.is_object() || !j.contains("pairs") || !j["pairs"].is_array())
        throw ProtocolError("predict request: missing 'pairs' array");
    std::vector<PredictItem> items;
    for (const auto& p : j["pairs"]) {
        if (!p.is_object()) throw ProtocolError("predict request: pair is not an object");
        for (const char* key : {"id", "premise", "hypothesis"})
            if (!p.contains(key) || !p[key].is_string())
                throw ProtocolError(std::string("predict request: pair lacks string '") + key + "'");
        items.push_back({p["id"].get<std::string>(), p["premise"].get<std::string>(),
                         p["hypothesis"].get<std::string>()});
    }
    return items;
}

std::string encode_predict_response(const std::string& model_id, std::span<const Prediction> predictions) {
    Json preds = Json::array();
    for (const auto& p : predictions) preds.push_back(to_json(p));
    Json j;
    j["model_id"] = model_id;
    j["predictions"] = std::move(preds);
    return j.dump();
}

PredictResponse decode_predict_response(std::string_view body) {
    auto j = parse_body(body, "predict response");
    if (!j.is_object() || !j.contains("model_id") || !j["model_id"].is_string())
        throw ProtocolError("predict response: missing model_id");
    if (!j.contains("predictions") || !j["predictions"].is_array())
        throw ProtocolError("predict response: missing 'predictions' array");
    PredictResponse r;
    r.model_id = j["model_id"].get<std::string>();
    for (const auto& p : j["predictions"]) {
        try {
            auto pred = prediction_from_json(p);
            if (!pred.probs) throw Error("prediction '" + pred.id + "' lacks probs");
            r.predictions.push_back(std::move(pred));
        } catch (const Error& e) {
            throw ProtocolError(std::string("predict response: ") + e.what());
        } catch (const Json::exception& e) {
            throw ProtocolError(std::string("predict response: ") + e.what());
        }
    }
    return r;
}

// --- cache ------------------------------------------------------------------

PredictionCache::PredictionCache(const std::filesystem::path& path) : path_(path) {
    if (std::filesystem::exists(path)) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError(path.string(), "cannot open prediction cache");
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            try {
                auto j = Json::parse(line);
                Json pred{{"id", ""}, {"label", j.at("label")}, {"probs", j.value("probs", Json(nullptr))}};
                entries_[key(j.at("model_id").get<std::string>(), j.at("premise").get<std::string>(),
                             j.at("hypothesis").get<std::string>())] = prediction_from_json(pred);
            } catch (const Json::exception& e) {
                throw ParseError(path.string(), lineno, e.what());
            } catch (const Error& e) {
                throw ParseError(path.string(), lineno, e.what());
            }
        }
    }
    file_.emplace(path, std::ios::binary | std::ios::app);
    if (!*file_) throw IoError(path.string(), "cannot open prediction cache for appending");
}

std::string PredictionCache::key(const std::string& model_id, const std::string& premise,
                                 const std::string& hypothesis) {
    std::string k;
    k.reserve(model_id.size() + premise.size() + hypothesis.size() + 2);
    k.append(model_id).push_back('\x1f');
    k.append(premise).push_back('\x1f');
    k.append(hypothesis);
    return k;
}

std::optional<Prediction> PredictionCache::lookup(const std::string& model_id, const std::string& premise,
                                                  const std::string& hypothesis) const {
    std::lock_guard lock(mutex_);
    auto it = entries_.find(key(model_id, premise, hypothesis));
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void PredictionCache::store(const std::string& model_id, const std::string& premise,
                            const std::string& hypothesis, const Prediction& prediction) {
    Prediction stored = prediction;
    stored.id.clear();
    std::lock_guard lock(mutex_);
    entries_[key(model_id, premise, hypothesis)] = stored;
    if (file_) {
        Json j;
        j["model_id"] = model_id;
        j["premise"] = premise;
        j["hypothesis"] = hypothesis;
        j["label"] = std::string(to_string(prediction.label));
        if (prediction.probs)
            j["probs"] = Json::array({(*prediction.probs)[0], (*prediction.probs)[1], (*prediction.probs)[2]});
        *file_ << j.dump() << '\n';
        file_->flush();
        if (!*file_) throw IoError(path_.string(), "cache append failed");
    }
}

std::size_t PredictionCache::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

// --- client -------------------------------------------------------------------

namespace {

struct Transient : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void split_url(const std::string& url, std::string& scheme_host_port, std::string& prefix) {
    const auto scheme_end = url.find("://");
    const auto host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    const auto path_start = url.find('/', host_start);
    scheme_host_port = url.substr(0, path_start);
    prefix = path_start == std::string::npos ? std::string() : url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    if (scheme_end == std::string::npos) scheme_host_port = "http://" + scheme_host_port;
}

httplib::Client make_client(const std::string& scheme_host_port, std::chrono::milliseconds timeout) {
    httplib::Client cli(scheme_host_port);
    const auto secs = static_cast<time_t>(timeout.count() / 1000);
    const auto usecs = static_cast<time_t>((timeout.count() % 1000) * 1000);
    cli.set_connection_timeout(secs, usecs);
    cli.set_read_timeout(secs, usecs);
    cli.set_write_timeout(secs, usecs);
    return cli;
}

}  // namespace

ModelClient::ModelClient(ModelEndpoint endpoint) : endpoint_(std::move(endpoint)) {
    if (endpoint_.batch_size == 0) throw Error("endpoint batch_size must be >= 1");
    if (endpoint_.max_in_flight == 0) throw Error("endpoint max_in_flight must be >= 1");
    if (endpoint_.attempts < 1) throw Error("endpoint attempts must be >= 1");
    split_url(endpoint_.base_url, scheme_host_port_, path_prefix_);
}

std::string ModelClient::health() {
    auto cli = make_client(scheme_host_port_, endpoint_.timeout);
    ++requests_;
    auto res = cli.Get(path_prefix_ + "/v1/health");
    if (!res)
        throw Error("model endpoint " + endpoint_.base_url + " unreachable: " + httplib::to_string(res.error()));
    if (res->status != 200)
        throw ProtocolError("health: HTTP " + std::to_string(res->status) + " from " + endpoint_.base_url);
    endpoint_.model_id = decode_health_response(res->body);
    return endpoint_.model_id;
}

std::vector<Prediction> ModelClient::send_batch(std::span<const PredictItem> items, std::size_t batch_index) {
    const std::string body = encode_predict_request(items);
    auto cli = make_client(scheme_host_port_, endpoint_.timeout);
    auto backoff = endpoint_.retry_backoff;
    std::string last_error;
    for (int attempt = 1; attempt <= endpoint_.attempts; ++attempt) {
        ++requests_;
        ++predict_requests_;
        auto res = cli.Post(path_prefix_ + "/v1/predict", body, "application/json");
        if (res && res->status == 200) {
            auto response = decode_predict_response(res->body);
            if (response.model_id != endpoint_.model_id)
                throw ProtocolError("batch " + std::to_string(batch_index) + ": server model_id '" +
                                    response.model_id + "' differs from '" + endpoint_.model_id + "'");
            if (response.predictions.size() != items.size())
                throw ProtocolError("batch " + std::to_string(batch_index) + ": sent " +
                                    std::to_string(items.size()) + " pairs, received " +
                                    std::to_string(response.predictions.size()) + " predictions");
            for (std::size_t i = 0; i < items.size(); ++i)
                if (response.predictions[i].id != items[i].id)
                    throw ProtocolError("batch " + std::to_string(batch_index) + ": prediction " + std::to_string(i) +
                                        " has id '" + response.predictions[i].id + "', expected '" + items[i].id +
                                        "'");
            return std::move(response.predictions);
        }
        if (res && res->status < 500)
            throw ProtocolError("batch " + std::to_string(batch_index) + ": HTTP " + std::to_string(res->status) +
                                (res->body.empty() ? "" : ": " + res->body));
        last_error = res ? "HTTP " + std::to_string(res->status) : httplib::to_string(res.error());
        if (attempt < endpoint_.attempts) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
    }
    throw Error("batch " + std::to_string(batch_index) + " (ids " + items.front().id + " .. " + items.back().id +
                ") failed after " + std::to_string(endpoint_.attempts) + " attempts: " + last_error);
}

std::vector<Prediction> ModelClient::request_predictions(std::span<const SentencePair> pairs,
                                                         PredictionCache* cache) {
    std::vector<Prediction> out(pairs.size());
    if (pairs.empty()) return out;

    std::vector<std::size_t> missing;
    if (cache && !endpoint_.model_id.empty()) {
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            if (auto hit = cache->lookup(endpoint_.model_id, pairs[i].premise, pairs[i].hypothesis)) {
                out[i] = *hit;
                out[i].id = pairs[i].id;
            } else {
                missing.push_back(i);
            }
        }
    } else {
        if (endpoint_.model_id.empty()) health();
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            if (cache) {
                if (auto hit = cache->lookup(endpoint_.model_id, pairs[i].premise, pairs[i].hypothesis)) {
                    out[i] = *hit;
                    out[i].id = pairs[i].id;
                    continue;
                }
            }
            missing.push_back(i);
        }
    }
    if (missing.empty()) return out;

    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t start = 0; start < missing.size(); start += endpoint_.batch_size) {
        const auto end = std::min(missing.size(), start + endpoint_.batch_size);
        batches.emplace_back(missing.begin() + static_cast<std::ptrdiff_t>(start),
                             missing.begin() + static_cast<std::ptrdiff_t>(end));
    }

    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(batches.size());
    auto worker = [&] {
        for (std::size_t b = next++; b < batches.size(); b = next++) {
            try {
                std::vector<PredictItem> items;
                for (auto i : batches[b]) items.push_back({pairs[i].id, pairs[i].premise, pairs[i].hypothesis});
                auto preds = send_batch(items, b);
                for (std::size_t k = 0; k < batches[b].size(); ++k) {
                    const auto i = batches[b][k];
                    if (cache) cache->store(endpoint_.model_id, pairs[i].premise, pairs[i].hypothesis, preds[k]);
                    out[i] = std::move(preds[k]);
                }
            } catch (...) {
                errors[b] = std::current_exception();
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        const auto n = std::min(endpoint_.max_in_flight, batches.size());
        for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

}  // namespace inoculate
