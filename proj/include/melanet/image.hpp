#pragma once

#include <string>
#include <vector>

#include "melanet/tensor.hpp"

namespace melanet {

enum class RangeTag { raw_0_255, standardized_0_1, tanh_m1_1 };

std::string range_tag_name(RangeTag tag);
RangeTag range_tag_from_name(const std::string& name);

// H x W x C pixel array (row-major, channel-fastest). The unit every pipeline
// stage exchanges; range_tag tracks which value convention the pixels are in.
struct ImageTensor {
    int height = 0;
    int width = 0;
    int channels = 0;
    RangeTag range_tag = RangeTag::raw_0_255;
    std::vector<float> values;

    ImageTensor() = default;
    ImageTensor(int h, int w, int c, RangeTag tag = RangeTag::raw_0_255)
        : height(h), width(w), channels(c), range_tag(tag),
          values(static_cast<size_t>(h) * w * c, 0.0f) {}

    float& at(int y, int x, int c) {
        return values[(static_cast<size_t>(y) * width + x) * channels + c];
    }
    float at(int y, int x, int c) const {
        return values[(static_cast<size_t>(y) * width + x) * channels + c];
    }
    int64_t numel() const { return static_cast<int64_t>(values.size()); }

    void validate() const;  // throws on invariant violation
};

// Square the image with centered zero padding on the shorter axis, then
// bilinearly resample to target_side x target_side. Aspect ratio of the
// content is preserved. target_side >= 8.
ImageTensor pad_and_resize(const ImageTensor& image, int target_side);

// Per-sample min-max rescale to [0,1]. Constant images map to all zeros.
// Requires range_tag == raw_0_255.
ImageTensor standardize(const ImageTensor& image);

// [0,1] <-> [-1,1] affine maps used at the translation-model boundary.
ImageTensor to_tanh_range(const ImageTensor& image);    // z -> 2z-1
ImageTensor from_tanh_range(const ImageTensor& image);  // x -> (x+1)/2

// NCHW conversion for model input. chw_to_image tags the result.
Tensor image_to_chw(const ImageTensor& image);
ImageTensor chw_to_image(const Tensor& chw, RangeTag tag);

// rgb in [0,1] -> h,s,v each in [0,1]
void rgb_to_hsv(float r, float g, float b, float& h, float& s, float& v);
void hsv_to_rgb(float h, float s, float v, float& r, float& g, float& b);

// Saturation-weighted mean hue; the benchmark's domain statistic. Pixels with
// saturation below min_saturation are excluded, which isolates the chromatic
// subject from any near-neutral background. Returns 0 when no pixel qualifies.
// Accepts raw or standardized RGB.
double saturation_weighted_mean_hue(const ImageTensor& image, double min_saturation = 0.0);

}  // namespace melanet
