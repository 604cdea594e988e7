#include "melanet/gan/generator.hpp"

#include <algorithm>

#include "melanet/errors.hpp"

namespace melanet::gan {

using nn::Conv2d;
using nn::InstanceNorm2d;
using nn::BatchNorm2d;
using nn::LeakyReLU;
using nn::ReLU;
using nn::Tanh;
using nn::UpsampleNearest2x;

namespace {

Tensor concat_channels(const Tensor& a, const Tensor& b) {
    int n = a.shape[0], h = a.shape[2], w = a.shape[3];
    int ca = a.shape[1], cb = b.shape[1];
    Tensor out({n, ca + cb, h, w});
    size_t hw = static_cast<size_t>(h) * w;
    for (int i = 0; i < n; ++i) {
        std::copy_n(a.data.data() + i * ca * hw, ca * hw,
                    out.data.data() + static_cast<size_t>(i) * (ca + cb) * hw);
        std::copy_n(b.data.data() + i * cb * hw, cb * hw,
                    out.data.data() + static_cast<size_t>(i) * (ca + cb) * hw + ca * hw);
    }
    return out;
}

void split_channels(const Tensor& g, int ca, Tensor& ga, Tensor& gb) {
    int n = g.shape[0], c = g.shape[1], h = g.shape[2], w = g.shape[3];
    int cb = c - ca;
    ga = Tensor({n, ca, h, w});
    gb = Tensor({n, cb, h, w});
    size_t hw = static_cast<size_t>(h) * w;
    for (int i = 0; i < n; ++i) {
        std::copy_n(g.data.data() + static_cast<size_t>(i) * c * hw, ca * hw,
                    ga.data.data() + i * ca * hw);
        std::copy_n(g.data.data() + static_cast<size_t>(i) * c * hw + ca * hw, cb * hw,
                    gb.data.data() + i * cb * hw);
    }
}

}  // namespace

void GeneratorSpec::validate() const {
    if (depth < 1) throw ConfigError("generator: depth must be >= 1");
    if (base_filters < 1) throw ConfigError("generator: base_filters must be >= 1");
    if (normalization != "instance" && normalization != "batch")
        throw ConfigError("generator: normalization must be instance or batch, got '" +
                          normalization + "'");
    if (in_channels < 1) throw ConfigError("generator: in_channels must be >= 1");
}

std::unique_ptr<nn::Layer> UNetGenerator::make_norm(int channels) const {
    if (spec_.normalization == "batch") return std::make_unique<BatchNorm2d>(channels);
    return std::make_unique<InstanceNorm2d>(channels);
}

int UNetGenerator::level_channels(int level) const {
    long long c = static_cast<long long>(spec_.base_filters) << level;
    return static_cast<int>(std::min<long long>(c, 8LL * spec_.base_filters));
}

UNetGenerator::UNetGenerator(const GeneratorSpec& spec, Rng& rng) : spec_(spec) {
    spec_.validate();
    stem_.conv = std::make_unique<Conv2d>(spec_.in_channels, level_channels(0), 3, 1, 1, rng);
    stem_.norm = make_norm(level_channels(0));
    stem_.act = std::make_unique<LeakyReLU>(0.2f);
    for (int i = 1; i <= spec_.depth; ++i) {
        Level down;
        down.conv = std::make_unique<Conv2d>(level_channels(i - 1), level_channels(i), 4, 2, 1, rng);
        down.norm = make_norm(level_channels(i));
        down.act = std::make_unique<LeakyReLU>(0.2f);
        down_.push_back(std::move(down));
    }
    for (int i = spec_.depth; i >= 1; --i) {
        Level up;
        up.up = std::make_unique<UpsampleNearest2x>();
        up.conv = std::make_unique<Conv2d>(level_channels(i) + level_channels(i - 1),
                                           level_channels(i - 1), 3, 1, 1, rng);
        up.norm = make_norm(level_channels(i - 1));
        up.act = std::make_unique<ReLU>();
        up_.push_back(std::move(up));
    }
    final_conv_ = std::make_unique<Conv2d>(level_channels(0), spec_.in_channels, 3, 1, 1, rng);
    final_act_ = std::make_unique<Tanh>();
}

Tensor UNetGenerator::forward(const Tensor& x, int slot, bool grad_mode) {
    if (x.ndim() != 4) throw ConfigError("generator: expected NCHW input, got " + x.shape_str());
    int side = x.shape[2];
    if (x.shape[3] != side)
        throw ConfigError("generator: expected square input, got " + x.shape_str());
    if (side % (1 << spec_.depth) != 0)
        throw ConfigError("generator: input side " + std::to_string(side) +
                          " not divisible by 2^" + std::to_string(spec_.depth));

    Tensor h = stem_.act->forward(stem_.norm->forward(stem_.conv->forward(x, slot, grad_mode),
                                                      slot, grad_mode),
                                  slot, grad_mode);
    std::vector<Tensor> skips;
    skips.push_back(h);
    for (auto& down : down_) {
        h = down.act->forward(down.norm->forward(down.conv->forward(h, slot, grad_mode), slot,
                                                 grad_mode),
                              slot, grad_mode);
        skips.push_back(h);
    }
    for (size_t d = 0; d < up_.size(); ++d) {
        auto& up = up_[d];
        Tensor upsampled = up.up->forward(h, slot, grad_mode);
        Tensor joined = concat_channels(upsampled, skips[up_.size() - 1 - d]);
        h = up.act->forward(up.norm->forward(up.conv->forward(joined, slot, grad_mode), slot,
                                             grad_mode),
                            slot, grad_mode);
    }
    return final_act_->forward(final_conv_->forward(h, slot, grad_mode), slot, grad_mode);
}

Tensor UNetGenerator::backward(const Tensor& grad_out, int slot) {
    if (slot >= static_cast<int>(skip_grads_.size())) skip_grads_.resize(slot + 1);
    auto& skip_grads = skip_grads_[slot];
    skip_grads.assign(spec_.depth, Tensor());

    Tensor g = final_conv_->backward(final_act_->backward(grad_out, slot), slot);
    for (size_t j = up_.size(); j-- > 0;) {  // reverse of forward order
        auto& up = up_[j];
        int level = spec_.depth - static_cast<int>(j);  // consumes level -> produces level-1
        g = up.conv->backward(up.norm->backward(up.act->backward(g, slot), slot), slot);
        Tensor g_up, g_skip;
        split_channels(g, level_channels(level), g_up, g_skip);
        skip_grads[level - 1] = std::move(g_skip);
        g = up.up->backward(g_up, slot);
    }
    // g is now the gradient at the bottleneck; walk the encoder down,
    // folding in the skip contributions
    for (size_t i = down_.size(); i-- > 0;) {
        auto& down = down_[i];
        g = down.conv->backward(down.norm->backward(down.act->backward(g, slot), slot), slot);
        add_inplace(g, skip_grads[i]);
    }
    return stem_.conv->backward(stem_.norm->backward(stem_.act->backward(g, slot), slot), slot);
}

void UNetGenerator::collect_params(const std::string& prefix, std::vector<nn::ParamRef>& out) {
    auto child = [&](const std::string& name) {
        return prefix.empty() ? name : prefix + "." + name;
    };
    stem_.conv->collect_params(child("stem.conv"), out);
    stem_.norm->collect_params(child("stem.norm"), out);
    for (size_t i = 0; i < down_.size(); ++i) {
        std::string base = "down" + std::to_string(i + 1);
        down_[i].conv->collect_params(child(base + ".conv"), out);
        down_[i].norm->collect_params(child(base + ".norm"), out);
    }
    for (size_t d = 0; d < up_.size(); ++d) {
        std::string base = "up" + std::to_string(up_.size() - d);  // named by target level
        up_[d].conv->collect_params(child(base + ".conv"), out);
        up_[d].norm->collect_params(child(base + ".norm"), out);
    }
    final_conv_->collect_params(child("final.conv"), out);
}

void UNetGenerator::zero_grad() {
    stem_.conv->zero_grad();
    stem_.norm->zero_grad();
    for (auto& l : down_) {
        l.conv->zero_grad();
        l.norm->zero_grad();
    }
    for (auto& l : up_) {
        l.conv->zero_grad();
        l.norm->zero_grad();
    }
    final_conv_->zero_grad();
}

void UNetGenerator::set_training(bool training) {
    stem_.norm->set_training(training);
    for (auto& l : down_) l.norm->set_training(training);
    for (auto& l : up_) l.norm->set_training(training);
}

std::vector<nn::ParamRef> UNetGenerator::params() {
    std::vector<nn::ParamRef> out;
    collect_params("", out);
    return out;
}

}  // namespace melanet::gan
