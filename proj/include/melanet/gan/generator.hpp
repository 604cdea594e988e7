#pragma once

#include <memory>
#include <string>
#include <vector>

#include "melanet/nn/layers.hpp"
#include "melanet/rng.hpp"

namespace melanet::gan {

struct GeneratorSpec {
    int depth = 4;  // down/up levels
    int base_filters = 64;
    std::string normalization = "instance";  // instance | batch
    int in_channels = 3;

    void validate() const;
};

// Encoder-decoder with skip connections: a full-resolution stem, `depth`
// stride-2 encoder levels, and mirrored nearest-upsample decoder levels
// whose inputs are concatenated with the matching encoder activation.
// Output passes through tanh, so it always lies in [-1, 1].
class UNetGenerator : public nn::Layer {
  public:
    UNetGenerator(const GeneratorSpec& spec, Rng& rng);

    Tensor forward(const Tensor& x, int slot, bool grad_mode) override;
    Tensor backward(const Tensor& grad_out, int slot) override;
    void collect_params(const std::string& prefix, std::vector<nn::ParamRef>& out) override;
    void zero_grad() override;
    void set_training(bool training) override;

    std::vector<nn::ParamRef> params();
    const GeneratorSpec& spec() const { return spec_; }

  private:
    struct Level {
        std::unique_ptr<nn::Layer> conv;
        std::unique_ptr<nn::Layer> norm;
        std::unique_ptr<nn::Layer> act;
        std::unique_ptr<nn::Layer> up;  // decoder only
    };

    std::unique_ptr<nn::Layer> make_norm(int channels) const;
    int level_channels(int level) const;

    GeneratorSpec spec_;
    Level stem_;
    std::vector<Level> down_;
    std::vector<Level> up_;
    std::unique_ptr<nn::Layer> final_conv_;
    std::unique_ptr<nn::Layer> final_act_;

    // grads flowing into each skip connection, filled during decoder
    // backward and consumed during encoder backward
    std::vector<std::vector<Tensor>> skip_grads_;  // [slot][level]
};

}  // namespace melanet::gan
