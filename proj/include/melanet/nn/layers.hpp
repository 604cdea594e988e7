#pragma once

#include <memory>
#include <string>
#include <vector>

#include "melanet/rng.hpp"
#include "melanet/tensor.hpp"

namespace melanet::nn {

// Named view of a parameter (or non-trainable buffer when grad == nullptr).
struct ParamRef {
    std::string name;
    Tensor* value = nullptr;
    Tensor* grad = nullptr;
};

// Layers keep per-slot caches so one module instance can appear several
// times in a computation graph within a single step (a cycle generator
// runs twice: translate and reconstruct).
class Layer {
  public:
    virtual ~Layer() = default;
    virtual Tensor forward(const Tensor& x, int slot, bool grad_mode) = 0;
    virtual Tensor backward(const Tensor& grad_out, int slot) = 0;
    virtual void collect_params(const std::string& prefix, std::vector<ParamRef>& out) {}
    virtual void zero_grad() {}
    virtual void set_training(bool) {}
};

class Conv2d : public Layer {
  public:
    Conv2d(int in_channels, int out_channels, int kernel, int stride, int padding, Rng& rng);

    Tensor forward(const Tensor& x, int slot, bool grad_mode) override;
    Tensor backward(const Tensor& grad_out, int slot) override;
    void collect_params(const std::string& prefix, std::vector<ParamRef>& out) override;
    void zero_grad() override;

    Tensor weight;  // {out, in, k, k}
    Tensor bias;    // {out}
    Tensor grad_weight, grad_bias;

  private:
    int in_channels_, out_channels_, kernel_, stride_, padding_;
    std::vector<Tensor> cached_input_;
};

class Linear : public Layer {
  public:
    Linear(int in_features, int out_features, Rng& rng);

    Tensor forward(const Tensor& x, int slot, bool grad_mode) override;
    Tensor backward(const Tensor& grad_out, int slot) override;
    void collect_params(const std::string& prefix, std::vector<ParamRef>& out) override;
    void zero_grad() override;

    Tensor weight;  // {out, in}
    Tensor bias;    // {out}
    Tensor grad_weight, grad_bias;

  private:
    int in_features_, out_features_;
    std::vector<Tensor> cached_input_;
};

class InstanceNorm2d : public Layer {
  public:
    explicit InstanceNorm2d(int channels, float eps = 1e-5f);

    Tensor forward(const Tensor& x, int slot, bool grad_mode) override;
    Tensor backward(const Tensor& grad_out, int slot) override;
    void collect_params(const std::string& prefix, std::vector<ParamRef>& out) override;
    void zero_grad() override;

    Tensor gamma, beta;
    Tensor grad_gamma, grad_beta;

  private:
    int channels_;
    float eps_;
    struct Cache {
        Tensor x_hat;
        std::vector<float> inv_std;  // one per (n, c)
    };
    std::vector<Cache> cache_;
};

class BatchNorm2d : public Layer {
  public:
    explicit BatchNorm2d(int channels, float eps = 1e-5f, float momentum = 0.1f);

    Tensor forward(const Tensor& x, int slot, bool grad_mode) override;
    Tensor backward(const Tensor& grad_out, int slot) override;
    void collect_params(const std::string& prefix, std::vector<ParamRef>& out) override;
    void zero_grad() override;
    void set_training(bool training) override { training_ = training; }

    Tensor gamma, beta;
    Tensor grad_gamma, grad_beta;
    Tensor running_mean, running_var;

  private:
    int channels_;
    float eps_, momentum_;
    bool training_ = true;
    struct Cache {
        Tensor x_hat;
        std::vector<float> inv_std;  // one per channel
    };
    std::vector<Cache> cache_;
};

class ReLU : public Layer {
  public:
    Tensor forward(const Tensor& x, int slot, bool grad_mode) override;
    Tensor backward(const Tensor& grad_out, int slot) override;

  private:
    std::vector<Tensor> cached_input_;
};

class LeakyReLU : public Layer {
  public:
    explicit LeakyReLU(float slope = 0.2f) : slope_(slope) {}
    Tensor forward(const Tensor& x, int slot, bool grad_mode) override;
    Tensor backward(const Tensor& grad_out, int slot) override;

  private:
    float slope_;
    std::vector<Tensor> cached_input_;
};

class Tanh : public Layer {
  public:
    Tensor forward(const Tensor& x, int slot, bool grad_mode) override;
    Tensor backward(const Tensor& grad_out, int slot) override;

  private:
    std::vector<Tensor> cached_output_;
};

class Sigmoid : public Layer {
  public:
    Tensor forward(const Tensor& x, int slot, bool grad_mode) override;
    Tensor backward(const Tensor& grad_out, int slot) override;

  private:
    std::vector<Tensor> cached_output_;
};

// Non-overlapping max pooling (kernel == stride).
class MaxPool2d : public Layer {
  public:
    explicit MaxPool2d(int kernel = 2) : kernel_(kernel) {}
    Tensor forward(const Tensor& x, int slot, bool grad_mode) override;
    Tensor backward(const Tensor& grad_out, int slot) override;

  private:
    int kernel_;
    struct Cache {
        std::vector<int> shape;
        std::vector<int> argmax;
    };
    std::vector<Cache> cache_;
};

class UpsampleNearest2x : public Layer {
  public:
    Tensor forward(const Tensor& x, int slot, bool grad_mode) override;
    Tensor backward(const Tensor& grad_out, int slot) override;

  private:
    std::vector<std::vector<int>> cached_shape_;
};

// {N, C, H, W} -> {N, C}
class GlobalAvgPool : public Layer {
  public:
    Tensor forward(const Tensor& x, int slot, bool grad_mode) override;
    Tensor backward(const Tensor& grad_out, int slot) override;

  private:
    std::vector<std::vector<int>> cached_shape_;
};

class Sequential : public Layer {
  public:
    Layer* add(const std::string& name, std::unique_ptr<Layer> layer);

    Tensor forward(const Tensor& x, int slot, bool grad_mode) override;
    Tensor backward(const Tensor& grad_out, int slot) override;
    void collect_params(const std::string& prefix, std::vector<ParamRef>& out) override;
    void zero_grad() override;
    void set_training(bool training) override;

    int size() const { return static_cast<int>(layers_.size()); }
    Layer& layer(int i) { return *layers_[i].layer; }
    const std::string& name(int i) const { return layers_[i].name; }

    std::vector<ParamRef> params();

  private:
    struct Named {
        std::string name;
        std::unique_ptr<Layer> layer;
    };
    std::vector<Named> layers_;
};

// Fill a tensor with N(0, sigma) draws; used for conv / linear weight init.
void init_gaussian(Tensor& t, Rng& rng, float sigma = 0.02f);

}  // namespace melanet::nn
