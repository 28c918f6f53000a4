#pragma once

#include "semcache/core.hpp"
#include "semcache/protocol.hpp"
#include "semcache/server.hpp"

#include <cstdint>
#include <list>
#include <map>
#include <optional>
#include <vector>

namespace semcache {

// Where the client obtains semantic decisions: in-process against a loaded
// dataset, or remote over the wire (see http_origin.hpp).
class Origin {
public:
    virtual ~Origin() = default;
    virtual SemanticResponse resolve(const SemanticRequest& request) = 0;
};

class LocalOrigin : public Origin {
public:
    explicit LocalOrigin(const Dataset& dataset) { state_.dataset = &dataset; }
    SemanticResponse resolve(const SemanticRequest& request) override {
        return semcache::resolve(state_, request);
    }

private:
    ServerState state_;
};

struct CachePolicy {
    enum class Kind { Unbounded, LruCapped };
    Kind kind = Kind::Unbounded;
    std::size_t max_entries = 0;  // total across scopes, LruCapped only

    static CachePolicy unbounded() { return {}; }
    static CachePolicy lru(std::size_t max_entries) {
        return {Kind::LruCapped, max_entries};
    }
};

enum class FetchMode { Exact, Semantic };

struct FetchOutcome {
    enum class Source { ExactHit, SemanticHit, Download };
    Source source = Source::Download;
    std::optional<ImageId> substitute_id;  // SemanticHit only
    std::uint64_t bytes_charged = 0;       // body bytes plus overhead if counted
};

struct CacheCounters {
    std::uint64_t bytes_downloaded = 0;
    std::uint64_t overhead_bytes = 0;
    std::uint64_t exact_hits = 0;
    std::uint64_t semantic_hits = 0;
    std::uint64_t misses = 0;  // full downloads
};

// Client-side image cache keyed by (website, category, image_id), with byte
// accounting per session. Not safe for concurrent mutation; simulation
// trials each own their instance.
class ClientCache {
public:
    explicit ClientCache(CachePolicy policy = CachePolicy::unbounded()) : policy_(policy) {}

    // Exact mode: hit or download, no wire traffic modeled.
    // Semantic mode: exact check first; on miss, a SemanticRequest carrying
    // every cached id of the image's scope. A reuse_similar answer charges
    // nothing beyond overhead and does NOT insert the requested id (the
    // client holds the substitute, not the requested image).
    FetchOutcome fetch(Origin& origin, const ImageRecord& image, int threshold,
                       FetchMode mode, bool include_overhead);

    bool contains(const ScopeKey& scope, ImageId id) const;
    std::vector<ImageId> cached_ids(const ScopeKey& scope) const;  // ascending
    std::size_t entry_count() const { return lru_.size(); }
    const CacheCounters& counters() const { return counters_; }

private:
    struct EntryKey {
        ScopeKey scope;
        ImageId id;
        auto operator<=>(const EntryKey&) const = default;
    };
    struct Entry {
        std::uint64_t byte_size = 0;
        std::list<EntryKey>::iterator lru_pos;
    };

    void insert(const ScopeKey& scope, ImageId id, std::uint64_t byte_size);
    void touch(const EntryKey& key);

    CachePolicy policy_;
    CacheCounters counters_;
    std::map<EntryKey, Entry> entries_;
    std::list<EntryKey> lru_;  // front = most recent
};

// One pseudo-client population cell: FW frequented websites, AC requests.
struct SimConfig {
    int frequented_websites = 1;   // FW
    int requests = 10;             // AC
    int trials = 100;
    int threshold = 1;
    bool include_overhead = false;
    std::uint64_t rng_seed = 0;
    CachePolicy policy = CachePolicy::unbounded();

    void validate() const;
};

struct TrialRecord {
    std::uint64_t exact_bytes = 0;
    std::uint64_t semantic_bytes = 0;
    double savings_pct = 0.0;  // 100 * (exact - semantic) / exact
};

struct CellSummary {
    double mean = 0.0;
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
    double min = 0.0;
    double max = 0.0;
};

struct SimResult {
    int frequented_websites = 0;
    int requests = 0;
    int threshold = 0;
    std::vector<TrialRecord> trials;
};

// Replays each trial's request sequence through a fresh exact-mode cache and
// a fresh semantic-mode cache. FW websites drawn without replacement, AC
// image requests drawn uniformly with replacement from those websites'
// images. Bit-identical results for identical (dataset, config): trial t
// seeds its own generator with rng_seed ^ t.
SimResult run_simulation(const Dataset& dataset, const SimConfig& config);

// Quartile statistics (linear interpolation) over per-trial savings_pct.
CellSummary summarize(const SimResult& result);

} // namespace semcache
