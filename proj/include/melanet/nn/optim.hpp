#pragma once

#include <map>
#include <string>
#include <vector>

#include "melanet/nn/checkpoint.hpp"
#include "melanet/nn/layers.hpp"

namespace melanet::nn {

class Adam {
  public:
    Adam(double lr, double beta1 = 0.5, double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void step(const std::vector<ParamRef>& params);

    void save_into(const std::string& prefix, Checkpoint& ckpt) const;
    void load_from(const std::string& prefix, const Checkpoint& ckpt,
                   const std::vector<ParamRef>& params);

    double lr() const { return lr_; }
    long long t() const { return t_; }

  private:
    double lr_, beta1_, beta2_, eps_;
    long long t_ = 0;
    std::map<std::string, Tensor> m_, v_;
};

class Adadelta {
  public:
    Adadelta(double lr = 0.001, double rho = 0.95, double eps = 1e-6)
        : lr_(lr), rho_(rho), eps_(eps) {}

    void step(const std::vector<ParamRef>& params);

    void save_into(const std::string& prefix, Checkpoint& ckpt) const;
    void load_from(const std::string& prefix, const Checkpoint& ckpt,
                   const std::vector<ParamRef>& params);

    double lr() const { return lr_; }
    void set_lr(double lr) { lr_ = lr; }

  private:
    double lr_, rho_, eps_;
    std::map<std::string, Tensor> accum_grad_, accum_update_;
};

}  // namespace melanet::nn
