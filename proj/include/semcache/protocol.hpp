#pragma once

#include "semcache/core.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace semcache {

// Wire format of the semantic cache protocol.
//
//   GET /img/{website}/{category}/{4-hex image id}
//   X-Sem-Cache-Ids: 0001,00ff        (omitted when the cache is empty)
//   X-Sem-Cache-Threshold: 1..4
//
// Responses: 200 full body (Content-Length = byte_size), 204 with a
// Reuse-Similar header naming the cached substitute, 404, or 400 with an
// X-Sem-Cache-Error reason token.
//
// Byte accounting uses the 2-bytes-per-id model regardless of the textual
// header encoding; the wire stays readable, the savings math stays binary.

inline constexpr const char* kHeaderCachedIds = "X-Sem-Cache-Ids";
inline constexpr const char* kHeaderThreshold = "X-Sem-Cache-Threshold";
inline constexpr const char* kHeaderError = "X-Sem-Cache-Error";
inline constexpr const char* kHeaderReuseSimilar = "Reuse-Similar";

enum class ProtocolErrorCode {
    BadPath,         // request path is not /img/{website}/{category}/{id}
    BadHex,          // id is not exactly four hex digits
    DuplicateId,     // cached id listed twice
    ThresholdRange,  // threshold header missing or outside 1..4
    RequestedInCache // requested id listed among cached ids
};

// Stable reason token carried in X-Sem-Cache-Error (e.g. "THRESHOLD_RANGE").
const char* protocol_error_token(ProtocolErrorCode code);

class ProtocolError : public std::runtime_error {
public:
    ProtocolError(ProtocolErrorCode code, const std::string& detail)
        : std::runtime_error(std::string(protocol_error_token(code)) + ": " + detail),
          code_(code) {}

    ProtocolErrorCode code() const { return code_; }
    const char* token() const { return protocol_error_token(code_); }

private:
    ProtocolErrorCode code_;
};

struct SemanticRequest {
    std::string website;
    std::string category;
    ImageId requested_id = 0;
    std::vector<ImageId> cached_ids;  // no duplicates, never contains requested_id
    int threshold = 1;                // 1..4

    bool operator==(const SemanticRequest&) const = default;
};

struct ReuseSimilar {
    ImageId id = 0;  // member of the request's cached_ids
    int score = 0;   // >= the request threshold
    bool operator==(const ReuseSimilar&) const = default;
};

struct FullImage {
    std::uint64_t byte_size = 0;
    std::optional<std::string> payload;
    bool operator==(const FullImage&) const = default;
};

struct NotFound {
    bool operator==(const NotFound&) const = default;
};

using SemanticResponse = std::variant<ReuseSimilar, FullImage, NotFound>;

using HeaderMap = std::map<std::string, std::string>;

// 16-bit id <-> exactly four lowercase hex digits.
std::string format_image_id(ImageId id);
ImageId parse_image_id_hex(const std::string& text);  // throws ProtocolError(BadHex)

// Percent-encoding for path segments (website and category names may contain
// spaces or slashes).
std::string percent_encode(const std::string& segment);
std::string percent_decode(const std::string& segment);

// Deterministic header encoding; decode_request(encode_request(r)) == r.
HeaderMap encode_request(const SemanticRequest& request);
std::string encode_request_path(const SemanticRequest& request);

// Parses a percent-encoded request path plus headers back into a request.
// Throws ProtocolError with the matching reason token on malformed input.
SemanticRequest decode_request(const HeaderMap& headers, const std::string& path);

// Overhead charged for the appended ids: 2 bytes per id, the accounting
// model every savings computation consumes.
std::uint64_t request_overhead_bytes(const SemanticRequest& request);

// Reuse-Similar response header value: "<4-hex id>; score=<1..4>".
std::string format_reuse_similar(const ReuseSimilar& reuse);
ReuseSimilar parse_reuse_similar(const std::string& value);  // throws ProtocolError(BadHex)

} // namespace semcache
