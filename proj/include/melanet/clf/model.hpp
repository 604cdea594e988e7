#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "melanet/dataset.hpp"
#include "melanet/image.hpp"
#include "melanet/nn/layers.hpp"

namespace melanet::clf {

struct ClassifierSpec {
    std::string backbone = "small_cnn_gap";  // small_cnn_gap | vgg16_gap
    std::string pretrained_weights;          // weight-container path; empty = fresh init

    void validate() const;
    int num_blocks() const;
    int final_channels() const;
};

// Convolutional backbone with a global-average-pool head feeding one
// two-unit fully connected layer; probabilities come from a softmax over
// those logits. The layer stack is split around the last conv activation
// so saliency code can backpropagate a logit to that activation.
class Classifier {
  public:
    Classifier(const ClassifierSpec& spec, int input_side, uint64_t seed);

    // x is {N, 3, side, side}, standardized [0,1] pixels
    Tensor logits(const Tensor& x, int slot = 0, bool grad_mode = false);

    std::vector<std::array<double, 2>> predict_proba(const std::vector<ImageTensor>& images);
    static std::array<double, 2> softmax2(double logit0, double logit1);

    const ClassifierSpec& spec() const { return spec_; }
    int input_side() const { return input_side_; }
    uint64_t seed() const { return seed_; }

    nn::Sequential& features_pre() { return features_pre_; }   // ends at last conv ReLU
    nn::Sequential& features_post() { return features_post_; }  // remaining pooling
    nn::Sequential& head() { return head_; }                    // GAP + FC

    std::vector<nn::ParamRef> params();
    int64_t param_count();

    void save(const std::filesystem::path& path);
    static Classifier load(const std::filesystem::path& path);

  private:
    void build(Rng& rng);
    void load_pretrained(const std::filesystem::path& path);

    ClassifierSpec spec_;
    int input_side_;
    uint64_t seed_;
    nn::Sequential features_pre_;
    nn::Sequential features_post_;
    nn::Sequential head_;
};

// label = malignant iff p_malignant >= threshold
std::vector<ClassLabel> classify(const std::vector<std::array<double, 2>>& probas,
                                 double threshold);

}  // namespace melanet::clf
