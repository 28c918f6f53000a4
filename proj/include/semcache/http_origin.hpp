#pragma once

#include "semcache/client.hpp"
#include "semcache/protocol.hpp"

#include <httplib.h>

#include <stdexcept>
#include <string>

namespace semcache {

// Origin backed by a remote cache server over the wire protocol.
class HttpOrigin : public Origin {
public:
    HttpOrigin(const std::string& host, int port) : client_(host, port) {
        client_.set_connection_timeout(5, 0);
        client_.set_read_timeout(30, 0);
    }

    SemanticResponse resolve(const SemanticRequest& request) override {
        httplib::Headers headers;
        for (const auto& [name, value] : encode_request(request)) {
            headers.emplace(name, value);
        }
        auto res = client_.Get(encode_request_path(request), headers);
        if (!res) {
            throw std::runtime_error("http origin: " + httplib::to_string(res.error()));
        }
        switch (res->status) {
            case 204:
                return parse_reuse_similar(res->get_header_value(kHeaderReuseSimilar));
            case 200:
                return FullImage{static_cast<std::uint64_t>(res->body.size()), res->body};
            case 404:
                return NotFound{};
            default:
                throw std::runtime_error("http origin: status " + std::to_string(res->status) +
                                         " " + res->get_header_value(kHeaderError));
        }
    }

private:
    httplib::Client client_;
};

} // namespace semcache
