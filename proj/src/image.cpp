#include "melanet/image.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "melanet/errors.hpp"

namespace melanet {

std::string range_tag_name(RangeTag tag) {
    switch (tag) {
        case RangeTag::raw_0_255: return "raw_0_255";
        case RangeTag::standardized_0_1: return "standardized_0_1";
        case RangeTag::tanh_m1_1: return "tanh_m1_1";
    }
    return "raw_0_255";
}

RangeTag range_tag_from_name(const std::string& name) {
    if (name == "raw_0_255") return RangeTag::raw_0_255;
    if (name == "standardized_0_1") return RangeTag::standardized_0_1;
    if (name == "tanh_m1_1") return RangeTag::tanh_m1_1;
    throw DataError("unknown range tag: " + name);
}

void ImageTensor::validate() const {
    if (height < 1 || width < 1) throw DataError("ImageTensor: empty spatial dims");
    if (channels != 1 && channels != 3) throw DataError("ImageTensor: channels must be 1 or 3");
    if (numel() != static_cast<int64_t>(height) * width * channels)
        throw DataError("ImageTensor: value count does not match dims");
    float lo = 0.0f, hi = 0.0f;
    bool check = false;
    if (range_tag == RangeTag::standardized_0_1) { lo = 0.0f; hi = 1.0f; check = true; }
    if (range_tag == RangeTag::tanh_m1_1) { lo = -1.0f; hi = 1.0f; check = true; }
    if (check) {
        for (float v : values) {
            if (!(v >= lo && v <= hi))
                throw DataError("ImageTensor: value " + std::to_string(v) + " outside " +
                                range_tag_name(range_tag));
        }
    }
}

namespace {

// Bilinear sample with pixel-center alignment; coordinates clamped to edges.
float sample_bilinear(const ImageTensor& img, float y, float x, int c) {
    float fy = std::clamp(y, 0.0f, static_cast<float>(img.height - 1));
    float fx = std::clamp(x, 0.0f, static_cast<float>(img.width - 1));
    int y0 = static_cast<int>(std::floor(fy));
    int x0 = static_cast<int>(std::floor(fx));
    int y1 = std::min(y0 + 1, img.height - 1);
    int x1 = std::min(x0 + 1, img.width - 1);
    float dy = fy - y0, dx = fx - x0;
    float top = img.at(y0, x0, c) * (1 - dx) + img.at(y0, x1, c) * dx;
    float bot = img.at(y1, x0, c) * (1 - dx) + img.at(y1, x1, c) * dx;
    return top * (1 - dy) + bot * dy;
}

ImageTensor resize_bilinear(const ImageTensor& img, int out_h, int out_w) {
    if (img.height == out_h && img.width == out_w) return img;
    ImageTensor out(out_h, out_w, img.channels, img.range_tag);
    float sy = static_cast<float>(img.height) / out_h;
    float sx = static_cast<float>(img.width) / out_w;
    for (int y = 0; y < out_h; ++y) {
        float src_y = (y + 0.5f) * sy - 0.5f;
        for (int x = 0; x < out_w; ++x) {
            float src_x = (x + 0.5f) * sx - 0.5f;
            for (int c = 0; c < img.channels; ++c)
                out.at(y, x, c) = sample_bilinear(img, src_y, src_x, c);
        }
    }
    return out;
}

}  // namespace

ImageTensor pad_and_resize(const ImageTensor& image, int target_side) {
    if (target_side < 8) throw DataError("pad_and_resize: target_side must be >= 8");
    const ImageTensor* src = &image;
    ImageTensor padded;
    if (image.height != image.width) {
        int side = std::max(image.height, image.width);
        padded = ImageTensor(side, side, image.channels, image.range_tag);
        int off_y = (side - image.height) / 2;
        int off_x = (side - image.width) / 2;
        for (int y = 0; y < image.height; ++y)
            for (int x = 0; x < image.width; ++x)
                for (int c = 0; c < image.channels; ++c)
                    padded.at(y + off_y, x + off_x, c) = image.at(y, x, c);
        src = &padded;
    }
    return resize_bilinear(*src, target_side, target_side);
}

ImageTensor standardize(const ImageTensor& image) {
    if (image.range_tag != RangeTag::raw_0_255)
        throw DataError("standardize: expected raw_0_255 input");
    ImageTensor out(image.height, image.width, image.channels, RangeTag::standardized_0_1);
    float lo = std::numeric_limits<float>::max();
    float hi = std::numeric_limits<float>::lowest();
    for (float v : image.values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (hi > lo) {
        float inv = 1.0f / (hi - lo);
        for (size_t i = 0; i < image.values.size(); ++i)
            out.values[i] = (image.values[i] - lo) * inv;
    }
    // constant image stays all zeros
    return out;
}

ImageTensor to_tanh_range(const ImageTensor& image) {
    if (image.range_tag != RangeTag::standardized_0_1)
        throw DataError("to_tanh_range: expected standardized_0_1 input");
    ImageTensor out = image;
    out.range_tag = RangeTag::tanh_m1_1;
    for (float& v : out.values) v = 2.0f * v - 1.0f;
    return out;
}

ImageTensor from_tanh_range(const ImageTensor& image) {
    if (image.range_tag != RangeTag::tanh_m1_1)
        throw DataError("from_tanh_range: expected tanh_m1_1 input");
    ImageTensor out = image;
    out.range_tag = RangeTag::standardized_0_1;
    for (float& v : out.values) v = std::clamp(0.5f * (v + 1.0f), 0.0f, 1.0f);
    return out;
}

Tensor image_to_chw(const ImageTensor& image) {
    Tensor t({1, image.channels, image.height, image.width});
    for (int c = 0; c < image.channels; ++c)
        for (int y = 0; y < image.height; ++y)
            for (int x = 0; x < image.width; ++x)
                t.at(0, c, y, x) = image.at(y, x, c);
    return t;
}

ImageTensor chw_to_image(const Tensor& chw, RangeTag tag) {
    if (chw.ndim() != 4 || chw.dim(0) != 1)
        throw DataError("chw_to_image: expected (1,C,H,W) tensor");
    ImageTensor img(chw.dim(2), chw.dim(3), chw.dim(1), tag);
    for (int c = 0; c < img.channels; ++c)
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x)
                img.at(y, x, c) = chw.at(0, c, y, x);
    return img;
}

void rgb_to_hsv(float r, float g, float b, float& h, float& s, float& v) {
    float mx = std::max({r, g, b});
    float mn = std::min({r, g, b});
    float d = mx - mn;
    v = mx;
    s = mx > 0 ? d / mx : 0.0f;
    if (d <= 0) {
        h = 0.0f;
        return;
    }
    if (mx == r)
        h = std::fmod((g - b) / d, 6.0f);
    else if (mx == g)
        h = (b - r) / d + 2.0f;
    else
        h = (r - g) / d + 4.0f;
    h /= 6.0f;
    if (h < 0) h += 1.0f;
}

void hsv_to_rgb(float h, float s, float v, float& r, float& g, float& b) {
    h = h - std::floor(h);
    float c = v * s;
    float hp = h * 6.0f;
    float x = c * (1.0f - std::fabs(std::fmod(hp, 2.0f) - 1.0f));
    float r1 = 0, g1 = 0, b1 = 0;
    if (hp < 1) { r1 = c; g1 = x; }
    else if (hp < 2) { r1 = x; g1 = c; }
    else if (hp < 3) { g1 = c; b1 = x; }
    else if (hp < 4) { g1 = x; b1 = c; }
    else if (hp < 5) { r1 = x; b1 = c; }
    else { r1 = c; b1 = x; }
    float m = v - c;
    r = r1 + m;
    g = g1 + m;
    b = b1 + m;
}

double saturation_weighted_mean_hue(const ImageTensor& image, double min_saturation) {
    if (image.channels != 3) return 0.0;
    float scale = image.range_tag == RangeTag::raw_0_255 ? 1.0f / 255.0f : 1.0f;
    double num = 0.0, den = 0.0;
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            float h, s, v;
            float r = image.at(y, x, 0) * scale;
            float g = image.at(y, x, 1) * scale;
            float b = image.at(y, x, 2) * scale;
            if (image.range_tag == RangeTag::tanh_m1_1) {
                r = 0.5f * (r + 1.0f);
                g = 0.5f * (g + 1.0f);
                b = 0.5f * (b + 1.0f);
            }
            rgb_to_hsv(std::clamp(r, 0.0f, 1.0f), std::clamp(g, 0.0f, 1.0f),
                       std::clamp(b, 0.0f, 1.0f), h, s, v);
            if (s < min_saturation) continue;
            num += static_cast<double>(s) * h;
            den += s;
        }
    }
    return den > 0 ? num / den : 0.0;
}

}  // namespace melanet
