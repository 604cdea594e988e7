#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>

#include "melanet/dataset.hpp"

namespace melanet {

enum class Transform {
    horizontal_flip,
    vertical_flip,
    gaussian_noise,
    brightness,
    zoom,
    horizontal_shift,
    vertical_shift,
    per_pixel_noise,
    color_space_conversion,
    rotation,
};

std::string transform_name(Transform t);
Transform transform_from_name(const std::string& name);

struct MagnitudeRange {
    double lo = 0.0;
    double hi = 0.0;
};

// Offline augmentation plan. Magnitude units: rotation in degrees, brightness
// as a relative factor delta, zoom as a scale factor range, shifts as a
// fraction of the image side, noise sigmas as a fraction of the 0..255 range.
struct AugmentationSpec {
    std::set<Transform> enabled;
    std::map<Transform, MagnitudeRange> magnitudes;
    int factor = 1;  // output size = factor * input size
    std::optional<int64_t> target_total;  // when set, wins over factor
    uint64_t seed = 0;

    static AugmentationSpec defaults();
    void validate() const;  // throws ConfigError
    MagnitudeRange range_of(Transform t) const;
};

// Copies the dataset and appends seeded transformed variants with
// provenance=augmented. Originals are included unmodified. Each augmented
// sample's random stream is derived from (seed, sample id, copy index), so
// per-sample generation order cannot change results.
LabelledDataset augment_offline(const LabelledDataset& dataset, const AugmentationSpec& spec);

// Single augmented variant of one image; exposed for tests.
ImageTensor apply_augmentations(const ImageTensor& image, const AugmentationSpec& spec,
                                const std::string& sample_id, int copy_index);

}  // namespace melanet
