#include "semcache/core.hpp"

#include "semcache/csv.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace semcache {
namespace {

using nlohmann::json;

std::string scope_label(const std::string& website, const std::string& category) {
    return website + "/" + category;
}

ImageId parse_image_id(const std::string& text, const std::string& where) {
    std::size_t pos = 0;
    unsigned long value = 0;
    try {
        value = std::stoul(text, &pos);
    } catch (const std::exception&) {
        throw ValidationError(where + ": image id '" + text + "' is not an integer");
    }
    if (pos != text.size() || value > 0xFFFF) {
        throw ValidationError(where + ": image id '" + text + "' is not a 16-bit integer");
    }
    return static_cast<ImageId>(value);
}

} // namespace

ReplaceabilityMatrix::ReplaceabilityMatrix(std::string website, std::string category,
                                           std::vector<ImageId> ids,
                                           std::unordered_map<ImageId, std::string> article_of,
                                           std::vector<std::uint8_t> scores)
    : website_(std::move(website)),
      category_(std::move(category)),
      ids_(std::move(ids)),
      articles_(std::move(article_of)),
      scores_(std::move(scores)) {
    const std::string where = "matrix " + scope_label(website_, category_);
    const std::size_t n = ids_.size();
    if (scores_.size() != n * n) {
        throw ValidationError(where + ": expected " + std::to_string(n * n) +
                              " cells, got " + std::to_string(scores_.size()));
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!index_.emplace(ids_[i], i).second) {
            throw ValidationError(where + ": duplicate image id " + std::to_string(ids_[i]));
        }
        if (articles_.find(ids_[i]) == articles_.end()) {
            throw ValidationError(where + ": image id " + std::to_string(ids_[i]) +
                                  " has no article mapping");
        }
    }
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < n; ++c) {
            const std::uint8_t v = scores_[r * n + c];
            const std::string cell = "[" + std::to_string(ids_[r]) + "][" +
                                     std::to_string(ids_[c]) + "]";
            if (v > 4) {
                throw ValidationError(where + ": entry " + cell + " = " +
                                      std::to_string(v) + " outside 0..4");
            }
            if (r == c) continue;  // diagonal ignored
            if (v != scores_[c * n + r]) {
                throw ValidationError(where + ": asymmetric at " + cell + " (" +
                                      std::to_string(v) + " vs " +
                                      std::to_string(scores_[c * n + r]) + ")");
            }
            if (v != 0 && articles_.at(ids_[r]) == articles_.at(ids_[c])) {
                throw ValidationError(where + ": same-article pair must be 0 at " + cell);
            }
        }
    }
}

const std::string& ReplaceabilityMatrix::article_of(ImageId id) const {
    auto it = articles_.find(id);
    if (it == articles_.end()) {
        throw std::invalid_argument("matrix " + scope_label(website_, category_) +
                                    ": unknown image id " + std::to_string(id));
    }
    return it->second;
}

int ReplaceabilityMatrix::score(ImageId a, ImageId b) const {
    if (a == b) {
        throw std::invalid_argument("matrix " + scope_label(website_, category_) +
                                    ": identical ids " + std::to_string(a) +
                                    " (exact hit, not a semantic score)");
    }
    auto ia = index_.find(a);
    auto ib = index_.find(b);
    if (ia == index_.end() || ib == index_.end()) {
        throw std::invalid_argument("matrix " + scope_label(website_, category_) +
                                    ": unknown image id " +
                                    std::to_string(ia == index_.end() ? a : b));
    }
    return scores_[ia->second * ids_.size() + ib->second];
}

int replaceability(const ReplaceabilityMatrix& matrix, ImageId a, ImageId b) {
    return matrix.score(a, b);
}

const ReplaceabilityMatrix* Dataset::find_matrix(const ScopeKey& scope) const {
    auto it = matrices.find(scope);
    return it == matrices.end() ? nullptr : &it->second;
}

const ImageRecord* Dataset::find_image(const ScopeKey& scope, ImageId id) const {
    auto it = image_index_.find({scope, id});
    return it == image_index_.end() ? nullptr : &images[it->second];
}

std::vector<const ImageRecord*> Dataset::images_of_website(const std::string& website) const {
    std::vector<const ImageRecord*> out;
    for (const auto& img : images) {
        if (img.website == website) out.push_back(&img);
    }
    return out;
}

void Dataset::rebuild_index() {
    image_index_.clear();
    for (std::size_t i = 0; i < images.size(); ++i) {
        image_index_[{images[i].scope(), images[i].image_id}] = i;
    }
}

namespace {

ReplaceabilityMatrix load_matrix_csv(const std::filesystem::path& path,
                                     const std::string& website, const std::string& category,
                                     const std::unordered_map<ImageId, std::string>& article_of) {
    const std::string where = "matrix file " + path.string();
    std::vector<std::vector<std::string>> rows;
    try {
        rows = csv::read_file(path);
    } catch (const std::exception& e) {
        throw ValidationError(where + ": " + e.what());
    }
    if (rows.empty()) {
        throw ValidationError(where + ": empty file");
    }

    const auto& header = rows[0];
    if (header.size() < 2 || !header[0].empty()) {
        throw ValidationError(where + ": first header cell must be empty, then image ids");
    }
    std::vector<ImageId> ids;
    for (std::size_t c = 1; c < header.size(); ++c) {
        ids.push_back(parse_image_id(header[c], where));
    }
    const std::size_t n = ids.size();
    if (rows.size() != n + 1) {
        throw ValidationError(where + ": expected " + std::to_string(n + 1) + " rows, got " +
                              std::to_string(rows.size()));
    }

    std::vector<std::uint8_t> scores(n * n, 0);
    for (std::size_t r = 0; r < n; ++r) {
        const auto& row = rows[r + 1];
        if (row.size() != n + 1) {
            throw ValidationError(where + ": row for id " + std::to_string(ids[r]) +
                                  " has " + std::to_string(row.size() - 1) + " cells, expected " +
                                  std::to_string(n));
        }
        if (parse_image_id(row[0], where) != ids[r]) {
            throw ValidationError(where + ": row order mismatch at '" + row[0] +
                                  "' (expected id " + std::to_string(ids[r]) + ")");
        }
        for (std::size_t c = 0; c < n; ++c) {
            int value = 0;
            try {
                std::size_t pos = 0;
                value = std::stoi(row[c + 1], &pos);
                if (pos != row[c + 1].size()) throw std::invalid_argument(row[c + 1]);
            } catch (const std::exception&) {
                throw ValidationError(where + ": cell [" + std::to_string(ids[r]) + "][" +
                                      std::to_string(ids[c]) + "] = '" + row[c + 1] +
                                      "' is not an integer");
            }
            if (value < 0 || value > 4) {
                throw ValidationError(where + ": entry [" + std::to_string(ids[r]) + "][" +
                                      std::to_string(ids[c]) + "] = " + std::to_string(value) +
                                      " outside 0..4");
            }
            scores[r * n + c] = static_cast<std::uint8_t>(value);
        }
    }

    // Matrix ids and manifest images must agree exactly.
    for (ImageId id : ids) {
        if (article_of.find(id) == article_of.end()) {
            throw ValidationError(where + ": dangling image reference " + std::to_string(id) +
                                  " (not in manifest images of " +
                                  scope_label(website, category) + ")");
        }
    }
    if (article_of.size() != n) {
        for (const auto& [id, _] : article_of) {
            if (std::find(ids.begin(), ids.end(), id) == ids.end()) {
                throw ValidationError(where + ": manifest image " + std::to_string(id) +
                                      " of " + scope_label(website, category) +
                                      " missing from matrix");
            }
        }
    }

    return ReplaceabilityMatrix(website, category, std::move(ids), article_of, std::move(scores));
}

} // namespace

Dataset load_dataset(const std::filesystem::path& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) {
        throw ValidationError("manifest: cannot open " + manifest_path.string());
    }
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ValidationError("manifest " + manifest_path.string() + ": " + e.what());
    }
    if (!doc.is_object() || !doc.contains("websites") || !doc["websites"].is_array()) {
        throw ValidationError("manifest " + manifest_path.string() +
                              ": top level must be {\"websites\": [...]}");
    }

    const auto base_dir = manifest_path.parent_path();
    Dataset ds;
    for (const auto& site : doc["websites"]) {
        if (!site.contains("name") || !site["name"].is_string()) {
            throw ValidationError("manifest: website entry missing string 'name'");
        }
        const std::string website = site["name"].get<std::string>();
        ds.website_names.push_back(website);
        if (!site.contains("categories") || !site["categories"].is_array()) {
            throw ValidationError("manifest: website '" + website + "' missing 'categories'");
        }
        for (const auto& cat : site["categories"]) {
            if (!cat.contains("name") || !cat["name"].is_string()) {
                throw ValidationError("manifest: category of '" + website +
                                      "' missing string 'name'");
            }
            const std::string category = cat["name"].get<std::string>();
            const std::string where = "manifest " + scope_label(website, category);
            if (!cat.contains("images") || !cat["images"].is_array()) {
                throw ValidationError(where + ": missing 'images'");
            }
            if (!cat.contains("matrix_file") || !cat["matrix_file"].is_string()) {
                throw ValidationError(where + ": missing 'matrix_file'");
            }

            std::unordered_map<ImageId, std::string> article_of;
            std::set<ImageId> seen;
            for (const auto& img : cat["images"]) {
                ImageRecord rec;
                rec.website = website;
                rec.category = category;
                try {
                    const auto raw_id = img.at("image_id").get<std::int64_t>();
                    if (raw_id < 0 || raw_id > 0xFFFF) {
                        throw ValidationError(where + ": image_id " + std::to_string(raw_id) +
                                              " is not a 16-bit integer");
                    }
                    rec.image_id = static_cast<ImageId>(raw_id);
                    rec.article_id = img.at("article_id").get<std::string>();
                    const auto raw_size = img.at("byte_size").get<std::int64_t>();
                    if (raw_size < 0) {
                        throw ValidationError(where + ": image " + std::to_string(rec.image_id) +
                                              " has negative byte_size");
                    }
                    rec.byte_size = static_cast<std::uint64_t>(raw_size);
                    rec.heading = img.at("heading").get<std::string>();
                    if (img.contains("alt_text") && !img["alt_text"].is_null()) {
                        rec.alt_text = img["alt_text"].get<std::string>();
                    }
                } catch (const json::exception& e) {
                    throw ValidationError(where + ": malformed image record: " + e.what());
                }
                if (!seen.insert(rec.image_id).second) {
                    throw ValidationError(where + ": duplicate image_id " +
                                          std::to_string(rec.image_id));
                }
                article_of[rec.image_id] = rec.article_id;
                ds.images.push_back(std::move(rec));
            }

            const auto matrix_path = base_dir / cat["matrix_file"].get<std::string>();
            auto matrix = load_matrix_csv(matrix_path, website, category, article_of);
            ScopeKey scope{website, category};
            if (!ds.matrices.emplace(scope, std::move(matrix)).second) {
                throw ValidationError("manifest: duplicate scope " +
                                      scope_label(website, category));
            }
        }
    }

    ds.rebuild_index();
    return ds;
}

std::filesystem::path save_dataset(const Dataset& dataset, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);

    // Group images by scope, preserving manifest order of scopes and images.
    std::vector<ScopeKey> scope_order;
    std::map<ScopeKey, std::vector<const ImageRecord*>> by_scope;
    for (const auto& img : dataset.images) {
        ScopeKey scope = img.scope();
        if (by_scope.find(scope) == by_scope.end()) scope_order.push_back(scope);
        by_scope[scope].push_back(&img);
    }

    json sites = json::array();
    std::map<std::string, json> site_objects;
    for (const auto& website : dataset.website_names) {
        site_objects[website] = json{{"name", website}, {"categories", json::array()}};
    }

    for (const auto& scope : scope_order) {
        const auto* matrix = dataset.find_matrix(scope);
        if (!matrix) {
            throw ValidationError("save: no matrix for scope " +
                                  scope_label(scope.website, scope.category));
        }
        std::string matrix_file = scope.website + "__" + scope.category + ".csv";
        std::replace_if(matrix_file.begin(), matrix_file.end(),
                        [](char c) { return c == '/' || c == ' ' || c == '\\'; }, '_');

        json images = json::array();
        for (const auto* img : by_scope[scope]) {
            json j{{"image_id", img->image_id},
                   {"article_id", img->article_id},
                   {"byte_size", img->byte_size},
                   {"heading", img->heading}};
            if (img->alt_text) j["alt_text"] = *img->alt_text;
            images.push_back(std::move(j));
        }
        site_objects.at(scope.website)["categories"].push_back(
            json{{"name", scope.category}, {"images", images}, {"matrix_file", matrix_file}});

        const std::size_t n = matrix->size();
        std::vector<std::vector<std::string>> rows;
        std::vector<std::string> header{""};
        for (ImageId id : matrix->ids()) header.push_back(std::to_string(id));
        rows.push_back(std::move(header));
        for (std::size_t r = 0; r < n; ++r) {
            std::vector<std::string> row{std::to_string(matrix->ids()[r])};
            for (std::size_t c = 0; c < n; ++c) {
                // Diagonal written as 4 by convention; ignored on load.
                row.push_back(r == c ? "4" : std::to_string(matrix->cell(r, c)));
            }
            rows.push_back(std::move(row));
        }
        csv::write_file(out_dir / matrix_file, rows);
    }

    for (const auto& website : dataset.website_names) {
        sites.push_back(site_objects.at(website));
    }
    const auto manifest_path = out_dir / "manifest.json";
    std::ofstream out(manifest_path);
    out << json{{"websites", sites}}.dump(2) << "\n";
    return manifest_path;
}

} // namespace semcache
