#include "melanet/clf/model.hpp"

#include <cmath>
#include <memory>

#include "melanet/errors.hpp"
#include "melanet/nn/checkpoint.hpp"

namespace melanet::clf {

using nn::Conv2d;
using nn::GlobalAvgPool;
using nn::Linear;
using nn::MaxPool2d;
using nn::ReLU;

namespace {

struct BlockPlan {
    int convs;
    int width;
};

std::vector<BlockPlan> backbone_plan(const std::string& backbone) {
    if (backbone == "small_cnn_gap") return {{1, 16}, {1, 32}, {1, 64}};
    if (backbone == "vgg16_gap")
        return {{2, 64}, {2, 128}, {3, 256}, {3, 512}, {3, 512}};
    throw ConfigError("classifier: unknown backbone '" + backbone +
                      "' (use small_cnn_gap or vgg16_gap)");
}

}  // namespace

void ClassifierSpec::validate() const {
    backbone_plan(backbone);
}

int ClassifierSpec::num_blocks() const {
    return static_cast<int>(backbone_plan(backbone).size());
}

int ClassifierSpec::final_channels() const {
    return backbone_plan(backbone).back().width;
}

Classifier::Classifier(const ClassifierSpec& spec, int input_side, uint64_t seed)
    : spec_(spec), input_side_(input_side), seed_(seed) {
    spec_.validate();
    int stride = 1 << spec_.num_blocks();
    if (input_side_ % stride != 0)
        throw ConfigError("classifier: input side " + std::to_string(input_side_) +
                          " not divisible by " + std::to_string(stride) + " (" +
                          std::to_string(spec_.num_blocks()) + " pooling blocks)");
    Rng rng(derive_seed(seed, "classifier_init"));
    build(rng);
    if (!spec_.pretrained_weights.empty()) load_pretrained(spec_.pretrained_weights);
}

void Classifier::build(Rng& rng) {
    auto plan = backbone_plan(spec_.backbone);
    int prev = 3;
    for (size_t b = 0; b < plan.size(); ++b) {
        std::string block = "block" + std::to_string(b + 1);
        for (int c = 0; c < plan[b].convs; ++c) {
            std::string conv = block + ".conv" + std::to_string(c + 1);
            features_pre_.add(conv, std::make_unique<Conv2d>(prev, plan[b].width, 3, 1, 1, rng));
            features_pre_.add(conv + "_act", std::make_unique<ReLU>());
            prev = plan[b].width;
        }
        if (b + 1 < plan.size())
            features_pre_.add(block + ".pool", std::make_unique<MaxPool2d>(2));
    }
    // final pool sits after the saliency target (the last conv activation)
    features_post_.add("block" + std::to_string(plan.size()) + ".pool",
                       std::make_unique<MaxPool2d>(2));
    head_.add("gap", std::make_unique<GlobalAvgPool>());
    head_.add("fc", std::make_unique<Linear>(prev, 2, rng));
}

void Classifier::load_pretrained(const std::filesystem::path& path) {
    nn::Checkpoint ckpt = nn::Checkpoint::load(path);
    auto restore = [&](std::vector<nn::ParamRef> params) {
        for (auto& p : params) {
            if (!ckpt.has_f32(p.name))
                throw ConfigError("pretrained weights: missing layer '" + p.name + "' in '" +
                                  path.string() + "'");
            const auto& arr = ckpt.get_f32(p.name);
            if (arr.shape != p.value->shape)
                throw ConfigError("pretrained weights: shape mismatch for layer '" + p.name +
                                  "'");
            p.value->data = arr.data;
        }
    };
    restore(features_pre_.params());
    restore(features_post_.params());
    // head stays freshly initialized
}

Tensor Classifier::logits(const Tensor& x, int slot, bool grad_mode) {
    if (x.ndim() != 4 || x.shape[2] != input_side_ || x.shape[3] != input_side_)
        throw DataError("classifier: expected {N,3," + std::to_string(input_side_) + "," +
                        std::to_string(input_side_) + "} input, got " + x.shape_str());
    Tensor h = features_pre_.forward(x, slot, grad_mode);
    h = features_post_.forward(h, slot, grad_mode);
    return head_.forward(h, slot, grad_mode);
}

std::array<double, 2> Classifier::softmax2(double logit0, double logit1) {
    double m = std::max(logit0, logit1);
    double e0 = std::exp(logit0 - m);
    double e1 = std::exp(logit1 - m);
    double z = e0 + e1;
    return {e0 / z, e1 / z};
}

std::vector<std::array<double, 2>> Classifier::predict_proba(
    const std::vector<ImageTensor>& images) {
    std::vector<std::array<double, 2>> out;
    out.reserve(images.size());
    for (const auto& img : images) {
        if (img.range_tag != RangeTag::standardized_0_1)
            throw DataError("classifier: inputs must be standardized to [0,1]");
        // one sample per forward pass keeps results batching-independent
        Tensor z = logits(image_to_chw(img), 0, false);
        out.push_back(softmax2(z.data[0], z.data[1]));
    }
    return out;
}

std::vector<nn::ParamRef> Classifier::params() {
    std::vector<nn::ParamRef> out;
    features_pre_.collect_params("", out);
    features_post_.collect_params("", out);
    head_.collect_params("head", out);
    return out;
}

int64_t Classifier::param_count() {
    int64_t n = 0;
    for (const auto& p : params()) n += p.value->numel();
    return n;
}

void Classifier::save(const std::filesystem::path& path) {
    nn::Checkpoint ckpt;
    ckpt.metadata["kind"] = "classifier";
    ckpt.metadata["backbone"] = spec_.backbone;
    ckpt.metadata["input_side"] = input_side_;
    ckpt.metadata["seed"] = seed_;
    for (const auto& p : params()) ckpt.put_f32(p.name, p.value->shape, p.value->data);
    ckpt.save(path);
}

Classifier Classifier::load(const std::filesystem::path& path) {
    nn::Checkpoint ckpt = nn::Checkpoint::load(path);
    if (!ckpt.metadata.contains("kind") || ckpt.metadata["kind"] != "classifier")
        throw DataError("checkpoint: '" + path.string() + "' is not a classifier checkpoint");
    ClassifierSpec spec;
    spec.backbone = ckpt.metadata["backbone"].get<std::string>();
    Classifier model(spec, ckpt.metadata["input_side"].get<int>(),
                     ckpt.metadata["seed"].get<uint64_t>());
    for (auto& p : model.params()) {
        const auto& arr = ckpt.get_f32(p.name);
        if (arr.shape != p.value->shape)
            throw DataError("checkpoint: shape mismatch for '" + p.name + "'");
        p.value->data = arr.data;
    }
    return model;
}

std::vector<ClassLabel> classify(const std::vector<std::array<double, 2>>& probas,
                                 double threshold) {
    if (threshold <= 0.0 || threshold >= 1.0)
        throw ConfigError("classify: threshold must be in (0,1)");
    std::vector<ClassLabel> out;
    out.reserve(probas.size());
    for (const auto& pr : probas)
        out.push_back(pr[1] >= threshold ? ClassLabel::malignant : ClassLabel::benign);
    return out;
}

}  // namespace melanet::clf
