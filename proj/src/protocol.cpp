#include "semcache/protocol.hpp"

#include "semcache/savings.hpp"

#include <algorithm>
#include <set>

namespace semcache {
namespace {

constexpr char kHexDigits[] = "0123456789abcdef";

int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

bool unreserved(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
           c == '-' || c == '.' || c == '_' || c == '~';
}

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> parts;
    std::string current;
    for (char c : text) {
        if (c == sep) {
            parts.push_back(current);
            current.clear();
        } else {
            current += c;
        }
    }
    parts.push_back(current);
    return parts;
}

} // namespace

const char* protocol_error_token(ProtocolErrorCode code) {
    switch (code) {
        case ProtocolErrorCode::BadPath: return "BAD_PATH";
        case ProtocolErrorCode::BadHex: return "BAD_HEX";
        case ProtocolErrorCode::DuplicateId: return "DUPLICATE_ID";
        case ProtocolErrorCode::ThresholdRange: return "THRESHOLD_RANGE";
        case ProtocolErrorCode::RequestedInCache: return "REQUESTED_IN_CACHE";
    }
    return "UNKNOWN";
}

std::string format_image_id(ImageId id) {
    std::string out(4, '0');
    for (int i = 3; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = kHexDigits[id & 0xF];
        id = static_cast<ImageId>(id >> 4);
    }
    return out;
}

ImageId parse_image_id_hex(const std::string& text) {
    if (text.size() != 4) {
        throw ProtocolError(ProtocolErrorCode::BadHex,
                            "id '" + text + "' is not four hex digits");
    }
    unsigned value = 0;
    for (char c : text) {
        const int digit = hex_value(c);
        if (digit < 0) {
            throw ProtocolError(ProtocolErrorCode::BadHex,
                                "id '" + text + "' contains non-hex character");
        }
        value = (value << 4) | static_cast<unsigned>(digit);
    }
    return static_cast<ImageId>(value);
}

std::string percent_encode(const std::string& segment) {
    std::string out;
    for (unsigned char c : segment) {
        if (unreserved(static_cast<char>(c))) {
            out += static_cast<char>(c);
        } else {
            out += '%';
            out += kHexDigits[c >> 4];
            out += kHexDigits[c & 0xF];
        }
    }
    return out;
}

std::string percent_decode(const std::string& segment) {
    std::string out;
    for (std::size_t i = 0; i < segment.size(); ++i) {
        if (segment[i] == '%' && i + 2 < segment.size()) {
            const int hi = hex_value(segment[i + 1]);
            const int lo = hex_value(segment[i + 2]);
            if (hi >= 0 && lo >= 0) {
                out += static_cast<char>((hi << 4) | lo);
                i += 2;
                continue;
            }
        }
        out += segment[i];
    }
    return out;
}

HeaderMap encode_request(const SemanticRequest& request) {
    HeaderMap headers;
    if (!request.cached_ids.empty()) {
        std::string ids;
        for (std::size_t i = 0; i < request.cached_ids.size(); ++i) {
            if (i) ids += ',';
            ids += format_image_id(request.cached_ids[i]);
        }
        headers[kHeaderCachedIds] = std::move(ids);
    }
    headers[kHeaderThreshold] = std::to_string(request.threshold);
    return headers;
}

std::string encode_request_path(const SemanticRequest& request) {
    return "/img/" + percent_encode(request.website) + "/" + percent_encode(request.category) +
           "/" + format_image_id(request.requested_id);
}

SemanticRequest decode_request(const HeaderMap& headers, const std::string& path) {
    const auto segments = split(path, '/');
    // "/img/w/c/0001" splits into ["", "img", w, c, id].
    if (segments.size() != 5 || !segments[0].empty() || segments[1] != "img") {
        throw ProtocolError(ProtocolErrorCode::BadPath,
                            "path '" + path + "' is not /img/{website}/{category}/{id}");
    }

    SemanticRequest request;
    request.website = percent_decode(segments[2]);
    request.category = percent_decode(segments[3]);
    request.requested_id = parse_image_id_hex(segments[4]);

    if (auto it = headers.find(kHeaderCachedIds); it != headers.end()) {
        std::set<ImageId> seen;
        for (const auto& token : split(it->second, ',')) {
            const ImageId id = parse_image_id_hex(token);
            if (!seen.insert(id).second) {
                throw ProtocolError(ProtocolErrorCode::DuplicateId,
                                    "cached id " + token + " listed twice");
            }
            if (id == request.requested_id) {
                throw ProtocolError(ProtocolErrorCode::RequestedInCache,
                                    "requested id " + token + " listed as cached");
            }
            request.cached_ids.push_back(id);
        }
    }

    auto threshold_it = headers.find(kHeaderThreshold);
    if (threshold_it == headers.end()) {
        throw ProtocolError(ProtocolErrorCode::ThresholdRange, "threshold header missing");
    }
    const std::string& raw = threshold_it->second;
    if (raw.size() != 1 || raw[0] < '1' || raw[0] > '4') {
        throw ProtocolError(ProtocolErrorCode::ThresholdRange,
                            "threshold '" + raw + "' outside 1..4");
    }
    request.threshold = raw[0] - '0';
    return request;
}

std::uint64_t request_overhead_bytes(const SemanticRequest& request) {
    return static_cast<std::uint64_t>(kIdOverheadBytes) * request.cached_ids.size();
}

std::string format_reuse_similar(const ReuseSimilar& reuse) {
    return format_image_id(reuse.id) + "; score=" + std::to_string(reuse.score);
}

ReuseSimilar parse_reuse_similar(const std::string& value) {
    const auto sep = value.find("; score=");
    if (sep == std::string::npos) {
        throw ProtocolError(ProtocolErrorCode::BadHex,
                            "malformed Reuse-Similar value '" + value + "'");
    }
    ReuseSimilar reuse;
    reuse.id = parse_image_id_hex(value.substr(0, sep));
    const std::string score = value.substr(sep + 8);
    if (score.size() != 1 || score[0] < '1' || score[0] > '4') {
        throw ProtocolError(ProtocolErrorCode::ThresholdRange,
                            "Reuse-Similar score '" + score + "' outside 1..4");
    }
    reuse.score = score[0] - '0';
    return reuse;
}

} // namespace semcache
