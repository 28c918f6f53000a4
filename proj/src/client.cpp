#include "semcache/client.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace semcache {

FetchOutcome ClientCache::fetch(Origin& origin, const ImageRecord& image, int threshold,
                                FetchMode mode, bool include_overhead) {
    const ScopeKey scope = image.scope();
    const EntryKey key{scope, image.image_id};

    if (auto it = entries_.find(key); it != entries_.end()) {
        touch(key);
        ++counters_.exact_hits;
        return {FetchOutcome::Source::ExactHit, std::nullopt, 0};
    }

    if (mode == FetchMode::Exact) {
        insert(scope, image.image_id, image.byte_size);
        counters_.bytes_downloaded += image.byte_size;
        ++counters_.misses;
        return {FetchOutcome::Source::Download, std::nullopt, image.byte_size};
    }

    SemanticRequest request;
    request.website = image.website;
    request.category = image.category;
    request.requested_id = image.image_id;
    request.cached_ids = cached_ids(scope);
    request.threshold = threshold;

    const std::uint64_t overhead = request_overhead_bytes(request);
    counters_.overhead_bytes += overhead;
    const std::uint64_t charged_overhead = include_overhead ? overhead : 0;

    const SemanticResponse response = origin.resolve(request);
    if (const auto* reuse = std::get_if<ReuseSimilar>(&response)) {
        touch({scope, reuse->id});  // the substitute is what gets displayed
        ++counters_.semantic_hits;
        return {FetchOutcome::Source::SemanticHit, reuse->id, charged_overhead};
    }
    if (const auto* full = std::get_if<FullImage>(&response)) {
        insert(scope, image.image_id, full->byte_size);
        counters_.bytes_downloaded += full->byte_size;
        ++counters_.misses;
        return {FetchOutcome::Source::Download, std::nullopt,
                full->byte_size + charged_overhead};
    }
    throw std::runtime_error("fetch: origin reported " + image.website + "/" + image.category +
                             "/" + std::to_string(image.image_id) + " not found");
}

bool ClientCache::contains(const ScopeKey& scope, ImageId id) const {
    return entries_.count({scope, id}) != 0;
}

std::vector<ImageId> ClientCache::cached_ids(const ScopeKey& scope) const {
    std::vector<ImageId> ids;
    // entries_ is ordered by (scope, id): scope ranges are contiguous.
    for (auto it = entries_.lower_bound({scope, 0});
         it != entries_.end() && it->first.scope == scope; ++it) {
        ids.push_back(it->first.id);
    }
    return ids;
}

void ClientCache::insert(const ScopeKey& scope, ImageId id, std::uint64_t byte_size) {
    if (policy_.kind == CachePolicy::Kind::LruCapped && policy_.max_entries == 0) {
        return;
    }
    if (policy_.kind == CachePolicy::Kind::LruCapped && lru_.size() >= policy_.max_entries) {
        const EntryKey& victim = lru_.back();
        entries_.erase(victim);
        lru_.pop_back();
    }
    lru_.push_front({scope, id});
    entries_[{scope, id}] = Entry{byte_size, lru_.begin()};
}

void ClientCache::touch(const EntryKey& key) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return;
    lru_.erase(it->second.lru_pos);
    lru_.push_front(key);
    it->second.lru_pos = lru_.begin();
}

void SimConfig::validate() const {
    if (frequented_websites < 1) throw std::invalid_argument("FW must be >= 1");
    if (requests < 1) throw std::invalid_argument("AC must be >= 1");
    if (trials < 1) throw std::invalid_argument("trials must be >= 1");
    if (threshold < 1 || threshold > 4) throw std::invalid_argument("threshold outside 1..4");
}

namespace {

// Bounded draw with rejection sampling; std::uniform_int_distribution is
// implementation-defined and would break cross-platform determinism.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v = rng();
    while (v >= limit) v = rng();
    return v % n;
}

double quantile(const std::vector<double>& sorted, double q) {
    const double h = q * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(h);
    if (lo + 1 >= sorted.size()) return sorted.back();
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

} // namespace

SimResult run_simulation(const Dataset& dataset, const SimConfig& config) {
    config.validate();
    const std::size_t website_count = dataset.website_names.size();
    if (static_cast<std::size_t>(config.frequented_websites) > website_count) {
        throw std::invalid_argument("FW=" + std::to_string(config.frequented_websites) +
                                    " exceeds dataset websites (" +
                                    std::to_string(website_count) + ")");
    }

    SimResult result;
    result.frequented_websites = config.frequented_websites;
    result.requests = config.requests;
    result.threshold = config.threshold;
    result.trials.reserve(static_cast<std::size_t>(config.trials));

    LocalOrigin origin(dataset);

    for (int trial = 0; trial < config.trials; ++trial) {
        std::mt19937_64 rng(config.rng_seed ^ static_cast<std::uint64_t>(trial));

        // FW websites without replacement: partial Fisher-Yates.
        std::vector<std::size_t> indices(website_count);
        for (std::size_t i = 0; i < website_count; ++i) indices[i] = i;
        for (int k = 0; k < config.frequented_websites; ++k) {
            const std::size_t j =
                static_cast<std::size_t>(k) +
                static_cast<std::size_t>(bounded(rng, website_count - static_cast<std::size_t>(k)));
            std::swap(indices[static_cast<std::size_t>(k)], indices[j]);
        }

        std::vector<const ImageRecord*> pool;
        for (int k = 0; k < config.frequented_websites; ++k) {
            auto site_images =
                dataset.images_of_website(dataset.website_names[indices[static_cast<std::size_t>(k)]]);
            pool.insert(pool.end(), site_images.begin(), site_images.end());
        }
        if (pool.empty()) {
            throw std::invalid_argument("selected websites contain no images");
        }

        // AC requests with replacement; the same sequence replays through
        // both cache modes so the comparison is paired.
        std::vector<const ImageRecord*> sequence;
        sequence.reserve(static_cast<std::size_t>(config.requests));
        for (int r = 0; r < config.requests; ++r) {
            sequence.push_back(pool[bounded(rng, pool.size())]);
        }

        ClientCache exact_cache(config.policy);
        ClientCache semantic_cache(config.policy);
        TrialRecord record;
        for (const ImageRecord* image : sequence) {
            record.exact_bytes += exact_cache
                                      .fetch(origin, *image, config.threshold, FetchMode::Exact,
                                             config.include_overhead)
                                      .bytes_charged;
            record.semantic_bytes += semantic_cache
                                         .fetch(origin, *image, config.threshold,
                                                FetchMode::Semantic, config.include_overhead)
                                         .bytes_charged;
        }
        if (record.exact_bytes > 0) {
            record.savings_pct = 100.0 *
                                 (static_cast<double>(record.exact_bytes) -
                                  static_cast<double>(record.semantic_bytes)) /
                                 static_cast<double>(record.exact_bytes);
        }
        result.trials.push_back(record);
    }
    return result;
}

CellSummary summarize(const SimResult& result) {
    if (result.trials.empty()) {
        throw std::invalid_argument("summarize: no trials");
    }
    std::vector<double> savings;
    savings.reserve(result.trials.size());
    double mean = 0.0;
    for (const auto& trial : result.trials) {
        savings.push_back(trial.savings_pct);
        mean += trial.savings_pct;
    }
    std::sort(savings.begin(), savings.end());

    CellSummary summary;
    summary.mean = mean / static_cast<double>(savings.size());
    summary.median = quantile(savings, 0.5);
    summary.q1 = quantile(savings, 0.25);
    summary.q3 = quantile(savings, 0.75);
    summary.min = savings.front();
    summary.max = savings.back();
    return summary;
}

} // namespace semcache
