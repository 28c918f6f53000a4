#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace semcache {

using ImageId = std::uint16_t;

// (website, category) pair that scopes image ids and matrices.
struct ScopeKey {
    std::string website;
    std::string category;

    auto operator<=>(const ScopeKey&) const = default;
};

struct ImageRecord {
    std::string website;
    std::string category;
    std::string article_id;
    ImageId image_id = 0;   // unique within (website, category)
    std::uint64_t byte_size = 0;
    std::optional<std::string> alt_text;
    std::string heading;

    ScopeKey scope() const { return {website, category}; }
};

// Raised by dataset loading/validation; the message names the offending record.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Per-category table of ordinal replaceability scores in {0..4}.
//
// Symmetric by construction. The diagonal is never consulted: requesting an
// image that is already cached is an exact hit and bypasses scoring.
// Two images of the same article always score 0.
class ReplaceabilityMatrix {
public:
    ReplaceabilityMatrix() = default;

    // `ids` fixes row/column order; `article_of` must cover every id.
    // `scores` is row-major n*n. Validates every invariant and throws
    // ValidationError naming the cell or id that breaks one.
    ReplaceabilityMatrix(std::string website, std::string category,
                         std::vector<ImageId> ids,
                         std::unordered_map<ImageId, std::string> article_of,
                         std::vector<std::uint8_t> scores);

    const std::string& website() const { return website_; }
    const std::string& category() const { return category_; }
    std::size_t size() const { return ids_.size(); }
    const std::vector<ImageId>& ids() const { return ids_; }

    bool contains(ImageId id) const { return index_.count(id) != 0; }
    const std::string& article_of(ImageId id) const;

    // Ordinal score for a pair of distinct images. Symmetric in (a, b).
    // Throws std::invalid_argument for a == b or unknown ids: identity is an
    // exact hit, not a semantic score, and callers must treat it upstream.
    int score(ImageId a, ImageId b) const;

    // Raw cell access by position (used by serialization; diagonal included).
    std::uint8_t cell(std::size_t row, std::size_t col) const {
        return scores_[row * ids_.size() + col];
    }

private:
    std::string website_;
    std::string category_;
    std::vector<ImageId> ids_;
    std::unordered_map<ImageId, std::size_t> index_;
    std::unordered_map<ImageId, std::string> articles_;
    std::vector<std::uint8_t> scores_;
};

// Immutable after load; safe for unrestricted concurrent reads.
struct Dataset {
    std::vector<ImageRecord> images;                  // manifest order
    std::map<ScopeKey, ReplaceabilityMatrix> matrices;
    std::vector<std::string> website_names;           // manifest order

    const ReplaceabilityMatrix* find_matrix(const ScopeKey& scope) const;
    const ImageRecord* find_image(const ScopeKey& scope, ImageId id) const;
    std::vector<const ImageRecord*> images_of_website(const std::string& website) const;

    void rebuild_index();

private:
    std::map<std::pair<ScopeKey, ImageId>, std::size_t> image_index_;
};

// Loads and validates a dataset from a JSON manifest. Matrix files are CSV,
// resolved relative to the manifest's directory. Throws ValidationError on
// any malformed or inconsistent record.
Dataset load_dataset(const std::filesystem::path& manifest_path);

// Writes manifest.json plus one matrix CSV per (website, category) under
// `out_dir`. load_dataset(save_dataset(d)) reproduces d.
std::filesystem::path save_dataset(const Dataset& dataset, const std::filesystem::path& out_dir);

// Score lookup with argument validation, shared by server and scorers.
int replaceability(const ReplaceabilityMatrix& matrix, ImageId a, ImageId b);

} // namespace semcache
