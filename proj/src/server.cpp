#include "semcache/server.hpp"

#include <httplib.h>
#include <json.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

namespace semcache {

SemanticResponse resolve(const ServerState& state, const SemanticRequest& request) {
    const ScopeKey scope{request.website, request.category};
    const ReplaceabilityMatrix* matrix = state.dataset->find_matrix(scope);
    if (!matrix) {
        throw UnknownScopeError(scope);
    }
    if (!matrix->contains(request.requested_id)) {
        return NotFound{};
    }

    int best_score = -1;
    ImageId best_id = 0;
    for (ImageId cached : request.cached_ids) {
        if (!matrix->contains(cached)) continue;  // stale client entry, skip
        const int score = matrix->score(request.requested_id, cached);
        if (score > best_score || (score == best_score && cached < best_id)) {
            best_score = score;
            best_id = cached;
        }
    }
    if (best_score >= request.threshold) {
        return ReuseSimilar{best_id, best_score};
    }

    const ImageRecord* image = state.dataset->find_image(scope, request.requested_id);
    if (!image) {
        return NotFound{};
    }
    return FullImage{image->byte_size, std::nullopt};
}

ServerConfig load_server_config(const std::filesystem::path& config_path) {
    std::ifstream in(config_path);
    if (!in) {
        throw std::runtime_error("config: cannot open " + config_path.string());
    }
    nlohmann::json doc;
    in >> doc;

    ServerConfig config;
    config.dataset_path = doc.at("dataset").get<std::string>();
    if (doc.contains("bind_host")) config.bind_host = doc["bind_host"].get<std::string>();
    if (doc.contains("bind_port")) config.bind_port = doc["bind_port"].get<int>();
    if (doc.contains("blob_root") && !doc["blob_root"].is_null()) {
        config.blob_root = std::filesystem::path(doc["blob_root"].get<std::string>());
    }
    if (doc.contains("log") && !doc["log"].is_null()) {
        config.log_path = std::filesystem::path(doc["log"].get<std::string>());
    }
    return config;
}

struct CacheServer::Impl {
    ServerState state;
    httplib::Server http;
    std::thread worker;

    std::mutex log_mutex;
    std::ofstream log_file;
    bool log_to_file = false;

    void log(const nlohmann::json& record) {
        std::lock_guard<std::mutex> lock(log_mutex);
        if (log_to_file) {
            log_file << record.dump() << "\n" << std::flush;
        } else {
            std::cerr << record.dump() << "\n";
        }
    }

    std::string blob_or_zeros(const ImageRecord& image) {
        if (state.blob_root) {
            const auto path = *state.blob_root / image.website / image.category /
                              (format_image_id(image.image_id) + ".img");
            std::ifstream blob(path, std::ios::binary);
            if (blob) {
                std::string bytes((std::istreambuf_iterator<char>(blob)),
                                  std::istreambuf_iterator<char>());
                return bytes;
            }
        }
        return std::string(image.byte_size, '\0');
    }

    void handle(const httplib::Request& req, httplib::Response& res) {
        nlohmann::json record{
            {"ts", std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::system_clock::now().time_since_epoch())
                       .count()},
            {"target", req.target.empty() ? req.path : req.target}};

        HeaderMap headers;
        for (const auto& [name, value] : req.headers) headers[name] = value;

        // httplib pre-decodes req.path; the raw target keeps percent-encoded
        // separators inside website/category names intact.
        std::string raw_path = req.target.empty() ? req.path : req.target;
        if (auto query = raw_path.find('?'); query != std::string::npos) {
            raw_path.resize(query);
        }

        SemanticRequest request;
        try {
            request = decode_request(headers, raw_path);
        } catch (const ProtocolError& e) {
            res.status = 400;
            res.set_header(kHeaderError, e.token());
            record["decision"] = "error";
            record["error"] = e.token();
            log(record);
            return;
        }

        record["website"] = request.website;
        record["category"] = request.category;
        record["requested"] = format_image_id(request.requested_id);
        record["threshold"] = request.threshold;
        record["overhead_bytes"] = request_overhead_bytes(request);

        SemanticResponse response;
        try {
            response = resolve(state, request);
        } catch (const UnknownScopeError&) {
            res.status = 404;
            res.set_header(kHeaderError, "UNKNOWN_CATEGORY");
            record["decision"] = "unknown_category";
            log(record);
            return;
        }

        if (const auto* reuse = std::get_if<ReuseSimilar>(&response)) {
            res.status = 204;
            res.set_header(kHeaderReuseSimilar, format_reuse_similar(*reuse));
            record["decision"] = "reuse_similar";
            record["substitute"] = format_image_id(reuse->id);
            record["score"] = reuse->score;
            record["bytes"] = 0;
        } else if (const auto* full = std::get_if<FullImage>(&response)) {
            const ImageRecord* image =
                state.dataset->find_image({request.website, request.category},
                                          request.requested_id);
            res.status = 200;
            res.set_content(blob_or_zeros(*image), "application/octet-stream");
            record["decision"] = "full_image";
            record["bytes"] = full->byte_size;
        } else {
            res.status = 404;
            record["decision"] = "not_found";
        }
        log(record);
    }
};

CacheServer::CacheServer(const Dataset& dataset, std::optional<std::filesystem::path> blob_root,
                         std::optional<std::filesystem::path> log_path)
    : impl_(std::make_unique<Impl>()) {
    impl_->state.dataset = &dataset;
    impl_->state.blob_root = std::move(blob_root);
    if (log_path) {
        impl_->log_file.open(*log_path, std::ios::app);
        impl_->log_to_file = impl_->log_file.is_open();
    }
    impl_->http.Get(R"(/img/.*)", [this](const httplib::Request& req, httplib::Response& res) {
        impl_->handle(req, res);
    });
    impl_->http.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
        res.set_content("ok", "text/plain");
    });
}

CacheServer::~CacheServer() {
    stop();
}

bool CacheServer::serve(const std::string& host, int port) {
    return impl_->http.listen(host, port);
}

int CacheServer::start_async(const std::string& host) {
    const int port = impl_->http.bind_to_any_port(host);
    if (port < 0) {
        throw std::runtime_error("server: failed to bind " + host);
    }
    impl_->worker = std::thread([this] { impl_->http.listen_after_bind(); });
    impl_->http.wait_until_ready();
    return port;
}

void CacheServer::stop() {
    if (impl_ && impl_->http.is_running()) {
        impl_->http.stop();
    }
    if (impl_ && impl_->worker.joinable()) {
        impl_->worker.join();
    }
}

} // namespace semcache
