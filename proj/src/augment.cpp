#include "melanet/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "melanet/errors.hpp"
#include "melanet/rng.hpp"

namespace melanet {

namespace {

const std::pair<Transform, const char*> kTransformNames[] = {
    {Transform::horizontal_flip, "horizontal_flip"},
    {Transform::vertical_flip, "vertical_flip"},
    {Transform::gaussian_noise, "gaussian_noise"},
    {Transform::brightness, "brightness"},
    {Transform::zoom, "zoom"},
    {Transform::horizontal_shift, "horizontal_shift"},
    {Transform::vertical_shift, "vertical_shift"},
    {Transform::per_pixel_noise, "per_pixel_noise"},
    {Transform::color_space_conversion, "color_space_conversion"},
    {Transform::rotation, "rotation"},
};

}  // namespace

std::string transform_name(Transform t) {
    for (const auto& [tr, name] : kTransformNames)
        if (tr == t) return name;
    return "";
}

Transform transform_from_name(const std::string& name) {
    for (const auto& [tr, n] : kTransformNames)
        if (name == n) return tr;
    throw ConfigError("unknown transform: " + name);
}

AugmentationSpec AugmentationSpec::defaults() {
    AugmentationSpec spec;
    spec.enabled = {Transform::horizontal_flip, Transform::vertical_flip,
                    Transform::gaussian_noise, Transform::brightness,
                    Transform::zoom,           Transform::horizontal_shift,
                    Transform::vertical_shift, Transform::rotation};
    spec.magnitudes = {
        {Transform::gaussian_noise, {0.0, 0.02}},
        {Transform::brightness, {-0.20, 0.20}},
        {Transform::zoom, {0.90, 1.10}},
        {Transform::horizontal_shift, {-0.10, 0.10}},
        {Transform::vertical_shift, {-0.10, 0.10}},
        {Transform::per_pixel_noise, {0.0, 0.05}},
        {Transform::color_space_conversion, {-0.05, 0.05}},
        {Transform::rotation, {-25.0, 25.0}},
    };
    return spec;
}

void AugmentationSpec::validate() const {
    if (factor < 1) throw ConfigError("augmentation factor must be >= 1");
    if (target_total && *target_total < 1) throw ConfigError("target_total must be >= 1");
    for (const auto& [t, r] : magnitudes) {
        if (!(std::isfinite(r.lo) && std::isfinite(r.hi)) || r.hi < r.lo)
            throw ConfigError("invalid magnitude range for " + transform_name(t));
    }
}

MagnitudeRange AugmentationSpec::range_of(Transform t) const {
    auto it = magnitudes.find(t);
    if (it != magnitudes.end()) return it->second;
    auto def = defaults();
    auto dit = def.magnitudes.find(t);
    return dit != def.magnitudes.end() ? dit->second : MagnitudeRange{0.0, 0.0};
}

namespace {

float sample_bilinear_zero(const ImageTensor& img, float y, float x, int c) {
    if (y < -1.0f || x < -1.0f || y > static_cast<float>(img.height) ||
        x > static_cast<float>(img.width))
        return 0.0f;
    int y0 = static_cast<int>(std::floor(y));
    int x0 = static_cast<int>(std::floor(x));
    float dy = y - y0, dx = x - x0;
    auto px = [&](int yy, int xx) -> float {
        if (yy < 0 || xx < 0 || yy >= img.height || xx >= img.width) return 0.0f;
        return img.at(yy, xx, c);
    };
    float top = px(y0, x0) * (1 - dx) + px(y0, x0 + 1) * dx;
    float bot = px(y0 + 1, x0) * (1 - dx) + px(y0 + 1, x0 + 1) * dx;
    return top * (1 - dy) + bot * dy;
}

ImageTensor affine_resample(const ImageTensor& img, float scale, float angle_deg,
                            float shift_x_px, float shift_y_px) {
    ImageTensor out(img.height, img.width, img.channels, img.range_tag);
    float cy = 0.5f * (img.height - 1);
    float cx = 0.5f * (img.width - 1);
    float rad = angle_deg * static_cast<float>(std::numbers::pi) / 180.0f;
    float ca = std::cos(rad), sa = std::sin(rad);
    // inverse map: output pixel -> source location
    for (int y = 0; y < out.height; ++y) {
        for (int x = 0; x < out.width; ++x) {
            float oy = static_cast<float>(y) - cy - shift_y_px;
            float ox = static_cast<float>(x) - cx - shift_x_px;
            float sy = (ca * oy - sa * ox) / scale + cy;
            float sx = (sa * oy + ca * ox) / scale + cx;
            for (int c = 0; c < img.channels; ++c)
                out.at(y, x, c) = sample_bilinear_zero(img, sy, sx, c);
        }
    }
    return out;
}

void flip_horizontal(ImageTensor& img) {
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width / 2; ++x)
            for (int c = 0; c < img.channels; ++c)
                std::swap(img.at(y, x, c), img.at(y, img.width - 1 - x, c));
}

void flip_vertical(ImageTensor& img) {
    for (int y = 0; y < img.height / 2; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c)
                std::swap(img.at(y, x, c), img.at(img.height - 1 - y, x, c));
}

void clamp_raw(ImageTensor& img) {
    for (float& v : img.values) v = std::clamp(v, 0.0f, 255.0f);
}

}  // namespace

ImageTensor apply_augmentations(const ImageTensor& image, const AugmentationSpec& spec,
                                const std::string& sample_id, int copy_index) {
    if (image.range_tag != RangeTag::raw_0_255)
        throw DataError("apply_augmentations: expected raw_0_255 pixels");
    Rng rng(derive_seed(derive_seed(spec.seed, sample_id),
                        "augment_copy:" + std::to_string(copy_index)));
    ImageTensor out = image;
    const auto& en = spec.enabled;

    if (en.count(Transform::horizontal_flip) && rng.uniform() < 0.5) flip_horizontal(out);
    if (en.count(Transform::vertical_flip) && rng.uniform() < 0.5) flip_vertical(out);

    float scale = 1.0f, angle = 0.0f, sx = 0.0f, sy = 0.0f;
    if (en.count(Transform::zoom)) {
        auto r = spec.range_of(Transform::zoom);
        scale = static_cast<float>(rng.uniform(r.lo, r.hi));
    }
    if (en.count(Transform::rotation)) {
        auto r = spec.range_of(Transform::rotation);
        angle = static_cast<float>(rng.uniform(r.lo, r.hi));
    }
    if (en.count(Transform::horizontal_shift)) {
        auto r = spec.range_of(Transform::horizontal_shift);
        sx = static_cast<float>(rng.uniform(r.lo, r.hi)) * image.width;
    }
    if (en.count(Transform::vertical_shift)) {
        auto r = spec.range_of(Transform::vertical_shift);
        sy = static_cast<float>(rng.uniform(r.lo, r.hi)) * image.height;
    }
    if (scale != 1.0f || angle != 0.0f || sx != 0.0f || sy != 0.0f)
        out = affine_resample(out, scale, angle, sx, sy);

    if (en.count(Transform::brightness)) {
        auto r = spec.range_of(Transform::brightness);
        float f = 1.0f + static_cast<float>(rng.uniform(r.lo, r.hi));
        for (float& v : out.values) v *= f;
    }
    if (en.count(Transform::color_space_conversion) && out.channels == 3) {
        auto r = spec.range_of(Transform::color_space_conversion);
        float dh = static_cast<float>(rng.uniform(r.lo, r.hi));
        for (int y = 0; y < out.height; ++y) {
            for (int x = 0; x < out.width; ++x) {
                float h, s, v;
                rgb_to_hsv(out.at(y, x, 0) / 255.0f, out.at(y, x, 1) / 255.0f,
                           out.at(y, x, 2) / 255.0f, h, s, v);
                float rr, gg, bb;
                hsv_to_rgb(h + dh, s, v, rr, gg, bb);
                out.at(y, x, 0) = rr * 255.0f;
                out.at(y, x, 1) = gg * 255.0f;
                out.at(y, x, 2) = bb * 255.0f;
            }
        }
    }
    if (en.count(Transform::gaussian_noise)) {
        auto r = spec.range_of(Transform::gaussian_noise);
        float sigma = static_cast<float>(rng.uniform(r.lo, r.hi)) * 255.0f;
        for (float& v : out.values) v += static_cast<float>(rng.normal()) * sigma;
    }
    if (en.count(Transform::per_pixel_noise)) {
        auto r = spec.range_of(Transform::per_pixel_noise);
        float amp = static_cast<float>(rng.uniform(r.lo, r.hi)) * 255.0f;
        for (float& v : out.values)
            v += static_cast<float>(rng.uniform(-1.0, 1.0)) * amp;
    }
    clamp_raw(out);
    return out;
}

LabelledDataset augment_offline(const LabelledDataset& dataset, const AugmentationSpec& spec) {
    spec.validate();
    int64_t n = dataset.size();
    int64_t total = spec.target_total ? *spec.target_total : spec.factor * n;
    if (total < n)
        throw ConfigError("augmentation target smaller than the input dataset");

    LabelledDataset out = dataset;
    int64_t to_add = total - n;
    // round-robin over originals so copies are spread evenly
    int copy = 1;
    int64_t added = 0;
    while (added < to_add) {
        for (int64_t i = 0; i < n && added < to_add; ++i, ++added) {
            const auto& src = dataset.samples[static_cast<size_t>(i)];
            LabelledSample aug;
            aug.id = src.id + "_aug" + std::to_string(copy);
            aug.label = src.label;
            aug.provenance = Provenance::augmented;
            aug.source_id = src.id;
            aug.image = apply_augmentations(src.image, spec, src.id, copy);
            out.samples.push_back(std::move(aug));
        }
        ++copy;
    }
    return out;
}

}  // namespace melanet
