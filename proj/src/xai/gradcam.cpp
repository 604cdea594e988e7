#include "melanet/xai/gradcam.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "melanet/errors.hpp"
#include "melanet/image_io.hpp"

namespace melanet::xai {

Tensor saliency_from(const Tensor& fmaps, const Tensor& grads) {
    if (fmaps.ndim() != 4 || fmaps.shape[0] != 1)
        throw ConfigError("saliency: expected {1,C,H,W} feature maps, got " + fmaps.shape_str());
    if (!fmaps.same_shape(grads))
        throw ConfigError("saliency: feature/gradient shape mismatch " + fmaps.shape_str() +
                          " vs " + grads.shape_str());
    int c = fmaps.shape[1], h = fmaps.shape[2], w = fmaps.shape[3];
    int hw = h * w;

    Tensor map({1, 1, h, w});
    for (int ch = 0; ch < c; ++ch) {
        const float* g = grads.data.data() + static_cast<size_t>(ch) * hw;
        const float* f = fmaps.data.data() + static_cast<size_t>(ch) * hw;
        double weight = 0.0;
        for (int p = 0; p < hw; ++p) weight += g[p];
        weight /= hw;
        for (int p = 0; p < hw; ++p)
            map.data[p] += static_cast<float>(weight) * f[p];
    }
    float mx = 0.0f;
    for (float& v : map.data) {
        v = std::max(v, 0.0f);
        mx = std::max(mx, v);
    }
    if (mx > 0)
        for (float& v : map.data) v /= mx;
    return map;
}

SaliencyMap grad_cam(clf::Classifier& model, const ImageTensor& image, int class_index,
                     const std::string& source_id) {
    if (class_index != 0 && class_index != 1)
        throw ConfigError("grad_cam: class index " + std::to_string(class_index) +
                          " invalid (expected 0 or 1)");
    if (image.range_tag != RangeTag::standardized_0_1)
        throw DataError("grad_cam: input must be standardized to [0,1]");

    Tensor x = image_to_chw(image);
    Tensor fmaps = model.features_pre().forward(x, 0, true);
    Tensor pooled = model.features_post().forward(fmaps, 0, true);
    Tensor logits = model.head().forward(pooled, 0, true);
    (void)logits;

    Tensor seed({1, 2});
    seed.data[static_cast<size_t>(class_index)] = 1.0f;  // d(logit_c)/d(logits)
    Tensor g = model.head().backward(seed, 0);
    Tensor grads = model.features_post().backward(g, 0);

    Tensor map = saliency_from(fmaps, grads);

    // bilinear upsample to input resolution, then renormalize
    ImageTensor small(map.shape[2], map.shape[3], 1, RangeTag::standardized_0_1);
    for (size_t i = 0; i < map.data.size(); ++i) small.values[i] = map.data[i];
    ImageTensor big = pad_and_resize(small, image.height);
    float mx = 0.0f;
    for (float v : big.values) mx = std::max(mx, v);
    if (mx > 0)
        for (float& v : big.values) v = std::clamp(v / mx, 0.0f, 1.0f);

    SaliencyMap out;
    out.height = big.height;
    out.width = big.width;
    out.values = big.values;
    out.class_index = class_index;
    out.source_id = source_id;
    return out;
}

FeatureMatrix export_features(clf::Classifier& model, const LabelledDataset& dataset) {
    FeatureMatrix fm;
    for (const auto& s : dataset.samples) {
        if (s.image.range_tag != RangeTag::standardized_0_1)
            throw DataError("export_features: sample '" + s.id +
                            "' is not standardized to [0,1]");
        Tensor x = image_to_chw(s.image);
        Tensor h = model.features_post().forward(model.features_pre().forward(x, 0, false), 0,
                                                 false);
        // GAP activations only; the FC layer plays no part in the embedding
        Tensor pooled = model.head().layer(0).forward(h, 0, false);
        if (!all_finite(pooled))
            throw EvalError("export_features: non-finite activation for sample '" + s.id + "'");
        fm.ids.push_back(s.id);
        fm.labels.push_back(s.label);
        fm.provenances.push_back(s.provenance);
        fm.rows.push_back(pooled.data);
    }
    return fm;
}

void write_feature_csv(const FeatureMatrix& features, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw EvalError("cannot open '" + path.string() + "' for writing");
    size_t dim = features.rows.empty() ? 0 : features.rows.front().size();
    os << "id,label,provenance";
    for (size_t i = 0; i < dim; ++i) os << ",f_" << i;
    os << "\n";
    char buf[32];
    for (size_t r = 0; r < features.rows.size(); ++r) {
        os << features.ids[r] << "," << label_name(features.labels[r]) << ","
           << provenance_name(features.provenances[r]);
        for (float v : features.rows[r]) {
            std::snprintf(buf, sizeof(buf), ",%.7g", v);
            os << buf;
        }
        os << "\n";
    }
}

namespace {

// blue -> red color ramp for heat values in [0,1]
void heat_color(float v, float& r, float& g, float& b) {
    r = std::clamp(1.5f - std::fabs(4.0f * v - 3.0f) * 0.5f, 0.0f, 1.0f);
    g = std::clamp(1.5f - std::fabs(4.0f * v - 2.0f) * 0.5f, 0.0f, 1.0f);
    b = std::clamp(1.5f - std::fabs(4.0f * v - 1.0f) * 0.5f, 0.0f, 1.0f);
}

ImageTensor heat_image(const SaliencyMap& map) {
    ImageTensor img(map.height, map.width, 3, RangeTag::raw_0_255);
    for (int y = 0; y < map.height; ++y) {
        for (int x = 0; x < map.width; ++x) {
            float r, g, b;
            heat_color(map.at(y, x), r, g, b);
            img.at(y, x, 0) = 255.0f * r;
            img.at(y, x, 1) = 255.0f * g;
            img.at(y, x, 2) = 255.0f * b;
        }
    }
    return img;
}

}  // namespace

void write_saliency_png(const SaliencyMap& map, const std::filesystem::path& path) {
    encode_png(heat_image(map), path);
}

void write_saliency_csv(const SaliencyMap& map, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw EvalError("cannot open '" + path.string() + "' for writing");
    char buf[32];
    for (int y = 0; y < map.height; ++y) {
        for (int x = 0; x < map.width; ++x) {
            std::snprintf(buf, sizeof(buf), "%s%.7g", x ? "," : "", map.at(y, x));
            os << buf;
        }
        os << "\n";
    }
}

void write_saliency_overlay_png(const SaliencyMap& map, const ImageTensor& image,
                                const std::filesystem::path& path) {
    if (image.height != map.height || image.width != map.width)
        throw EvalError("saliency overlay: map and image dimensions differ");
    ImageTensor heat = heat_image(map);
    ImageTensor base = image;
    if (base.range_tag == RangeTag::standardized_0_1) {
        for (float& v : base.values) v *= 255.0f;
        base.range_tag = RangeTag::raw_0_255;
    } else if (base.range_tag != RangeTag::raw_0_255) {
        throw EvalError("saliency overlay: image must be raw or standardized");
    }
    constexpr float kOpacity = 0.4f;
    ImageTensor out(map.height, map.width, 3, RangeTag::raw_0_255);
    for (int y = 0; y < map.height; ++y)
        for (int x = 0; x < map.width; ++x)
            for (int c = 0; c < 3; ++c) {
                float b = base.channels == 3 ? base.at(y, x, c) : base.at(y, x, 0);
                out.at(y, x, c) = (1.0f - kOpacity) * b + kOpacity * heat.at(y, x, c);
            }
    encode_png(out, path);
}

}  // namespace melanet::xai
