#pragma once

#include "semcache/core.hpp"
#include "semcache/protocol.hpp"

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>

namespace semcache {

// Raised when a request names a (website, category) the dataset does not
// serve; distinct from an unknown image id, which resolves to NotFound.
class UnknownScopeError : public std::runtime_error {
public:
    explicit UnknownScopeError(const ScopeKey& scope)
        : std::runtime_error("unknown scope " + scope.website + "/" + scope.category) {}
};

// Read-only after construction; shared freely across request handlers.
struct ServerState {
    const Dataset* dataset = nullptr;
    std::optional<std::filesystem::path> blob_root;
};

// Picks the best substitute among the cached ids: highest score wins, ties
// broken by lowest image id, so the response is a pure function of the
// request's id set. Cached ids unknown to the matrix are skipped (client
// caches may outlive the server catalog). Returns ReuseSimilar only when the
// best score meets the threshold; otherwise the full image, or NotFound for
// an unknown requested id.
SemanticResponse resolve(const ServerState& state, const SemanticRequest& request);

struct ServerConfig {
    std::filesystem::path dataset_path;
    std::string bind_host = "127.0.0.1";
    int bind_port = 8080;
    std::optional<std::filesystem::path> blob_root;
    std::optional<std::filesystem::path> log_path;  // default: stderr
};

ServerConfig load_server_config(const std::filesystem::path& config_path);

// HTTP front end: decode_request -> resolve -> wire response, one JSONL
// access log line per request (decision, bytes, overhead).
class CacheServer {
public:
    CacheServer(const Dataset& dataset, std::optional<std::filesystem::path> blob_root,
                std::optional<std::filesystem::path> log_path);
    ~CacheServer();

    CacheServer(const CacheServer&) = delete;
    CacheServer& operator=(const CacheServer&) = delete;

    // Binds and serves until stop(); blocks. Returns false on bind failure.
    bool serve(const std::string& host, int port);

    // Binds an ephemeral port and serves on a background thread; returns the
    // port. Used by tests and local demos.
    int start_async(const std::string& host);

    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace semcache
