#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "melanet/clf/model.hpp"
#include "melanet/dataset.hpp"
#include "melanet/image.hpp"
#include "melanet/tensor.hpp"

namespace melanet::xai {

struct SaliencyMap {
    int height = 0;
    int width = 0;
    std::vector<float> values;  // row-major, [0,1]
    int class_index = 0;
    std::string source_id;

    float at(int y, int x) const { return values[static_cast<size_t>(y) * width + x]; }
};

// Core weighting step at feature resolution: channel weights are the
// spatial means of the gradients, the map is the rectified weighted sum of
// the feature maps, max-normalized (all-zero maps stay zero). fmaps and
// grads are {1, C, H, W}.
Tensor saliency_from(const Tensor& fmaps, const Tensor& grads);

// Backpropagates the chosen pre-softmax logit to the classifier's last
// convolutional activation, then weights and upsamples to input resolution.
SaliencyMap grad_cam(clf::Classifier& model, const ImageTensor& image, int class_index,
                     const std::string& source_id = "");

struct FeatureMatrix {
    std::vector<std::string> ids;
    std::vector<ClassLabel> labels;
    std::vector<Provenance> provenances;
    std::vector<std::vector<float>> rows;  // GAP activations, one per sample
};

FeatureMatrix export_features(clf::Classifier& model, const LabelledDataset& dataset);

// id,label,provenance,f_0..f_{n-1}
void write_feature_csv(const FeatureMatrix& features, const std::filesystem::path& path);

// Heat map as PNG, the same values as CSV, and the heat map alpha-blended
// over the input at 0.4 opacity.
void write_saliency_png(const SaliencyMap& map, const std::filesystem::path& path);
void write_saliency_csv(const SaliencyMap& map, const std::filesystem::path& path);
void write_saliency_overlay_png(const SaliencyMap& map, const ImageTensor& image,
                                const std::filesystem::path& path);

}  // namespace melanet::xai
