#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "melanet/image.hpp"

#include <json.hpp>

namespace melanet {

enum class ClassLabel : int { benign = 0, malignant = 1 };
enum class Provenance { original, synthetic, augmented };

std::string label_name(ClassLabel label);
ClassLabel label_from_name(const std::string& name);  // throws DataError on unknown
std::string provenance_name(Provenance p);
Provenance provenance_from_name(const std::string& name);

struct LabelledSample {
    std::string id;  // unique within a dataset
    ClassLabel label = ClassLabel::benign;
    Provenance provenance = Provenance::original;
    std::string source_id;  // set when provenance == synthetic
    ImageTensor image;
};

struct ClassCounts {
    int64_t benign = 0;
    int64_t malignant = 0;
    int64_t total() const { return benign + malignant; }
    bool operator==(const ClassCounts&) const = default;
};

struct LabelledDataset {
    std::vector<LabelledSample> samples;
    uint64_t order_seed = 0;  // seed of the permutation that produced the stored order

    ClassCounts class_counts() const;
    int64_t size() const { return static_cast<int64_t>(samples.size()); }
    bool empty() const { return samples.empty(); }
    void require_unique_ids() const;  // throws DataError on collision

    std::vector<const LabelledSample*> of_label(ClassLabel label) const;
    LabelledDataset filter_label(ClassLabel label) const;
};

// Two-column CSV manifest (`path,label` with header; snapshot manifests add
// provenance and source_id columns). Rows are loaded in manifest order with
// provenance=original unless the manifest carries a provenance column.
LabelledDataset load_manifest(const std::filesystem::path& manifest_path,
                              const std::filesystem::path& image_root);

// Majority class subsampled without replacement down to the minority count.
LabelledDataset undersample_balance(const LabelledDataset& dataset, uint64_t seed);

// Concatenates and applies a seeded permutation. Id sets must be disjoint.
LabelledDataset merge_and_shuffle(const LabelledDataset& original,
                                  const LabelledDataset& synthetic, uint64_t seed);

// Dataset snapshot directory: images/ + manifest.csv + metadata.json.
void write_snapshot(const LabelledDataset& dataset, const std::filesystem::path& dir,
                    const nlohmann::json& metadata);
LabelledDataset read_snapshot(const std::filesystem::path& dir);
nlohmann::json read_snapshot_metadata(const std::filesystem::path& dir);

}  // namespace melanet
