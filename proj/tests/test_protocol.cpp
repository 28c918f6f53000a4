#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "semcache/protocol.hpp"

#include <random>
#include <set>

using namespace semcache;

namespace {

ProtocolErrorCode decode_error_code(const HeaderMap& headers, const std::string& path) {
    try {
        (void)decode_request(headers, path);
    } catch (const ProtocolError& e) {
        return e.code();
    }
    FAIL("expected ProtocolError");
    return ProtocolErrorCode::BadPath;
}

std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v = rng();
    while (v >= limit) v = rng();
    return v % n;
}

SemanticRequest random_request(std::mt19937_64& rng) {
    static const std::string names[] = {"news-alpha", "b", "www.example.com", "Wörld Affairs",
                                        "science and tech", "a/b"};
    SemanticRequest request;
    request.website = names[bounded(rng, 6)];
    request.category = names[bounded(rng, 6)];
    request.requested_id = static_cast<ImageId>(bounded(rng, 0x10000));
    request.threshold = 1 + static_cast<int>(bounded(rng, 4));

    std::set<ImageId> ids;
    const std::size_t count = bounded(rng, 12);
    while (ids.size() < count) {
        const auto id = static_cast<ImageId>(bounded(rng, 0x10000));
        if (id != request.requested_id) ids.insert(id);
    }
    request.cached_ids.assign(ids.begin(), ids.end());
    return request;
}

} // namespace

TEST_CASE("image id formatting is four lowercase hex digits") {
    CHECK(format_image_id(0x0001) == "0001");
    CHECK(format_image_id(0x00FF) == "00ff");
    CHECK(format_image_id(0xABCD) == "abcd");
    CHECK(format_image_id(0xFFFF) == "ffff");
    CHECK(format_image_id(0) == "0000");
    CHECK(parse_image_id_hex("abcd") == 0xABCD);
    CHECK(parse_image_id_hex("ABCD") == 0xABCD);  // liberal in what we accept
}

TEST_CASE("encode_request header layout") {
    SemanticRequest request{"w", "c", 0x0042, {0x0001, 0x00FF}, 2};
    const auto headers = encode_request(request);
    CHECK(headers.at(kHeaderCachedIds) == "0001,00ff");
    CHECK(headers.at(kHeaderThreshold) == "2");
    CHECK(encode_request_path(request) == "/img/w/c/0042");

    SemanticRequest empty{"w", "c", 0x0042, {}, 1};
    const auto no_ids = encode_request(empty);
    CHECK(no_ids.count(kHeaderCachedIds) == 0);
    CHECK(no_ids.at(kHeaderThreshold) == "1");
}

TEST_CASE("paths percent-encode website and category names") {
    SemanticRequest request{"www.site.com", "World Affairs", 7, {}, 1};
    CHECK(encode_request_path(request) == "/img/www.site.com/World%20Affairs/0007");
    const auto decoded = decode_request(encode_request(request), encode_request_path(request));
    CHECK(decoded == request);

    CHECK(percent_decode(percent_encode("a/b c%d\xc3\xa9")) == "a/b c%d\xc3\xa9");
}

TEST_CASE("decode_request error tokens") {
    const std::string good_path = "/img/w/c/0042";
    HeaderMap base{{kHeaderThreshold, "2"}};

    CHECK(decode_error_code(base, "/images/w/c/0042") == ProtocolErrorCode::BadPath);
    CHECK(decode_error_code(base, "/img/w/0042") == ProtocolErrorCode::BadPath);
    CHECK(decode_error_code(base, "/img/w/c/00g2") == ProtocolErrorCode::BadHex);
    CHECK(decode_error_code(base, "/img/w/c/42") == ProtocolErrorCode::BadHex);
    CHECK(decode_error_code(base, "/img/w/c/00042") == ProtocolErrorCode::BadHex);

    HeaderMap dup = base;
    dup[kHeaderCachedIds] = "0001,0001";
    CHECK(decode_error_code(dup, good_path) == ProtocolErrorCode::DuplicateId);

    HeaderMap self = base;
    self[kHeaderCachedIds] = "0042";
    CHECK(decode_error_code(self, good_path) == ProtocolErrorCode::RequestedInCache);

    HeaderMap bad_ids = base;
    bad_ids[kHeaderCachedIds] = "0001,zz";
    CHECK(decode_error_code(bad_ids, good_path) == ProtocolErrorCode::BadHex);

    HeaderMap high{{kHeaderThreshold, "5"}};
    CHECK(decode_error_code(high, good_path) == ProtocolErrorCode::ThresholdRange);
    HeaderMap low{{kHeaderThreshold, "0"}};
    CHECK(decode_error_code(low, good_path) == ProtocolErrorCode::ThresholdRange);
    HeaderMap missing;
    CHECK(decode_error_code(missing, good_path) == ProtocolErrorCode::ThresholdRange);

    CHECK(std::string(protocol_error_token(ProtocolErrorCode::ThresholdRange)) ==
          "THRESHOLD_RANGE");
    CHECK(std::string(protocol_error_token(ProtocolErrorCode::DuplicateId)) == "DUPLICATE_ID");
}

TEST_CASE("round trip holds for random valid requests") {
    std::mt19937_64 rng(20240901);
    for (int i = 0; i < 2000; ++i) {
        const auto request = random_request(rng);
        const auto decoded = decode_request(encode_request(request),
                                            encode_request_path(request));
        CHECK(decoded == request);
        CHECK(request_overhead_bytes(request) == 2 * request.cached_ids.size());
    }
}

TEST_CASE("overhead accounting examples") {
    SemanticRequest request{"w", "c", 1, {}, 1};
    CHECK(request_overhead_bytes(request) == 0);
    for (ImageId id = 2; id < 166; ++id) request.cached_ids.push_back(id);
    CHECK(request.cached_ids.size() == 164);
    CHECK(request_overhead_bytes(request) == 328);
    request.cached_ids.resize(18);
    CHECK(request_overhead_bytes(request) == 36);
}

TEST_CASE("reuse-similar header value codec") {
    const ReuseSimilar reuse{0x00FF, 3};
    CHECK(format_reuse_similar(reuse) == "00ff; score=3");
    CHECK(parse_reuse_similar("00ff; score=3") == reuse);
    CHECK_THROWS_AS((void)parse_reuse_similar("00ff"), ProtocolError);
    CHECK_THROWS_AS((void)parse_reuse_similar("00ff; score=9"), ProtocolError);
}
