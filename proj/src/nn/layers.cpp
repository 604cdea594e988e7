#include "melanet/nn/layers.hpp"

#include <cblas.h>

#include <algorithm>
#include <cmath>
#include <cstring>

#include "melanet/errors.hpp"

namespace melanet::nn {

void init_gaussian(Tensor& t, Rng& rng, float sigma) {
    for (auto& v : t.data) v = static_cast<float>(rng.normal(0.0, sigma));
}

namespace {

template <typename T>
T& slot_ref(std::vector<T>& v, int slot) {
    if (slot < 0) throw ConfigError("layer slot must be non-negative");
    if (slot >= static_cast<int>(v.size())) v.resize(slot + 1);
    return v[slot];
}

int conv_out_dim(int in, int kernel, int stride, int padding) {
    int span = in + 2 * padding - kernel;
    if (span < 0) throw ConfigError("conv kernel larger than padded input");
    return span / stride + 1;
}

// x: one sample (C, H, W) -> col: (C*k*k) x (oh*ow), row-major
void im2col(const float* x, int channels, int height, int width, int kernel, int stride,
            int padding, int oh, int ow, float* col) {
    int patch = oh * ow;
    for (int c = 0; c < channels; ++c) {
        for (int ky = 0; ky < kernel; ++ky) {
            for (int kx = 0; kx < kernel; ++kx) {
                float* row = col + ((c * kernel + ky) * kernel + kx) * patch;
                for (int oy = 0; oy < oh; ++oy) {
                    int iy = oy * stride - padding + ky;
                    if (iy < 0 || iy >= height) {
                        std::memset(row + oy * ow, 0, sizeof(float) * ow);
                        continue;
                    }
                    const float* src = x + (c * height + iy) * width;
                    for (int ox = 0; ox < ow; ++ox) {
                        int ix = ox * stride - padding + kx;
                        row[oy * ow + ox] = (ix >= 0 && ix < width) ? src[ix] : 0.0f;
                    }
                }
            }
        }
    }
}

void col2im_accumulate(const float* col, int channels, int height, int width, int kernel,
                       int stride, int padding, int oh, int ow, float* x) {
    int patch = oh * ow;
    for (int c = 0; c < channels; ++c) {
        for (int ky = 0; ky < kernel; ++ky) {
            for (int kx = 0; kx < kernel; ++kx) {
                const float* row = col + ((c * kernel + ky) * kernel + kx) * patch;
                for (int oy = 0; oy < oh; ++oy) {
                    int iy = oy * stride - padding + ky;
                    if (iy < 0 || iy >= height) continue;
                    float* dst = x + (c * height + iy) * width;
                    for (int ox = 0; ox < ow; ++ox) {
                        int ix = ox * stride - padding + kx;
                        if (ix >= 0 && ix < width) dst[ix] += row[oy * ow + ox];
                    }
                }
            }
        }
    }
}

}  // namespace

Conv2d::Conv2d(int in_channels, int out_channels, int kernel, int stride, int padding, Rng& rng)
    : weight({out_channels, in_channels, kernel, kernel}),
      bias({out_channels}),
      grad_weight({out_channels, in_channels, kernel, kernel}),
      grad_bias({out_channels}),
      in_channels_(in_channels),
      out_channels_(out_channels),
      kernel_(kernel),
      stride_(stride),
      padding_(padding) {
    init_gaussian(weight, rng);
}

Tensor Conv2d::forward(const Tensor& x, int slot, bool grad_mode) {
    if (x.shape.size() != 4 || x.shape[1] != in_channels_)
        throw ConfigError("conv2d: expected input with " + std::to_string(in_channels_) +
                          " channels, got shape " + x.shape_str());
    int n = x.shape[0], h = x.shape[2], w = x.shape[3];
    int oh = conv_out_dim(h, kernel_, stride_, padding_);
    int ow = conv_out_dim(w, kernel_, stride_, padding_);
    int kdim = in_channels_ * kernel_ * kernel_;
    int patch = oh * ow;

    Tensor out({n, out_channels_, oh, ow});
    std::vector<float> col(static_cast<size_t>(kdim) * patch);
    // one GEMM per sample so a result never depends on how a batch is cut
    for (int i = 0; i < n; ++i) {
        const float* xi = x.data.data() + static_cast<size_t>(i) * in_channels_ * h * w;
        float* oi = out.data.data() + static_cast<size_t>(i) * out_channels_ * patch;
        im2col(xi, in_channels_, h, w, kernel_, stride_, padding_, oh, ow, col.data());
        cblas_sgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, out_channels_, patch, kdim, 1.0f,
                    weight.data.data(), kdim, col.data(), patch, 0.0f, oi, patch);
        for (int c = 0; c < out_channels_; ++c) {
            float b = bias.data[c];
            for (int p = 0; p < patch; ++p) oi[c * patch + p] += b;
        }
    }
    if (grad_mode) slot_ref(cached_input_, slot) = x;
    return out;
}

Tensor Conv2d::backward(const Tensor& grad_out, int slot) {
    const Tensor& x = cached_input_.at(slot);
    int n = x.shape[0], h = x.shape[2], w = x.shape[3];
    int oh = grad_out.shape[2], ow = grad_out.shape[3];
    int kdim = in_channels_ * kernel_ * kernel_;
    int patch = oh * ow;

    Tensor grad_in(x.shape);
    grad_in.zero();
    std::vector<float> col(static_cast<size_t>(kdim) * patch);
    std::vector<float> grad_col(static_cast<size_t>(kdim) * patch);
    for (int i = 0; i < n; ++i) {
        const float* xi = x.data.data() + static_cast<size_t>(i) * in_channels_ * h * w;
        const float* gi = grad_out.data.data() + static_cast<size_t>(i) * out_channels_ * patch;
        im2col(xi, in_channels_, h, w, kernel_, stride_, padding_, oh, ow, col.data());
        cblas_sgemm(CblasRowMajor, CblasNoTrans, CblasTrans, out_channels_, kdim, patch, 1.0f, gi,
                    patch, col.data(), patch, 1.0f, grad_weight.data.data(), kdim);
        cblas_sgemm(CblasRowMajor, CblasTrans, CblasNoTrans, kdim, patch, out_channels_, 1.0f,
                    weight.data.data(), kdim, gi, patch, 0.0f, grad_col.data(), patch);
        for (int c = 0; c < out_channels_; ++c) {
            float s = 0.0f;
            for (int p = 0; p < patch; ++p) s += gi[c * patch + p];
            grad_bias.data[c] += s;
        }
        float* gx = grad_in.data.data() + static_cast<size_t>(i) * in_channels_ * h * w;
        col2im_accumulate(grad_col.data(), in_channels_, h, w, kernel_, stride_, padding_, oh, ow,
                          gx);
    }
    return grad_in;
}

void Conv2d::collect_params(const std::string& prefix, std::vector<ParamRef>& out) {
    out.push_back({prefix + ".weight", &weight, &grad_weight});
    out.push_back({prefix + ".bias", &bias, &grad_bias});
}

void Conv2d::zero_grad() {
    grad_weight.zero();
    grad_bias.zero();
}

Linear::Linear(int in_features, int out_features, Rng& rng)
    : weight({out_features, in_features}),
      bias({out_features}),
      grad_weight({out_features, in_features}),
      grad_bias({out_features}),
      in_features_(in_features),
      out_features_(out_features) {
    init_gaussian(weight, rng);
}

Tensor Linear::forward(const Tensor& x, int slot, bool grad_mode) {
    if (x.shape.size() != 2 || x.shape[1] != in_features_)
        throw ConfigError("linear: expected input with " + std::to_string(in_features_) +
                          " features, got shape " + x.shape_str());
    int n = x.shape[0];
    Tensor out({n, out_features_});
    for (int i = 0; i < n; ++i) {
        const float* xi = x.data.data() + static_cast<size_t>(i) * in_features_;
        for (int o = 0; o < out_features_; ++o) {
            const float* wo = weight.data.data() + static_cast<size_t>(o) * in_features_;
            float s = bias.data[o];
            for (int k = 0; k < in_features_; ++k) s += wo[k] * xi[k];
            out.data[static_cast<size_t>(i) * out_features_ + o] = s;
        }
    }
    if (grad_mode) slot_ref(cached_input_, slot) = x;
    return out;
}

Tensor Linear::backward(const Tensor& grad_out, int slot) {
    const Tensor& x = cached_input_.at(slot);
    int n = x.shape[0];
    Tensor grad_in(x.shape);
    grad_in.zero();
    for (int i = 0; i < n; ++i) {
        const float* xi = x.data.data() + static_cast<size_t>(i) * in_features_;
        const float* gi = grad_out.data.data() + static_cast<size_t>(i) * out_features_;
        float* gxi = grad_in.data.data() + static_cast<size_t>(i) * in_features_;
        for (int o = 0; o < out_features_; ++o) {
            float g = gi[o];
            grad_bias.data[o] += g;
            float* gwo = grad_weight.data.data() + static_cast<size_t>(o) * in_features_;
            const float* wo = weight.data.data() + static_cast<size_t>(o) * in_features_;
            for (int k = 0; k < in_features_; ++k) {
                gwo[k] += g * xi[k];
                gxi[k] += g * wo[k];
            }
        }
    }
    return grad_in;
}

void Linear::collect_params(const std::string& prefix, std::vector<ParamRef>& out) {
    out.push_back({prefix + ".weight", &weight, &grad_weight});
    out.push_back({prefix + ".bias", &bias, &grad_bias});
}

void Linear::zero_grad() {
    grad_weight.zero();
    grad_bias.zero();
}

InstanceNorm2d::InstanceNorm2d(int channels, float eps)
    : gamma({channels}),
      beta({channels}),
      grad_gamma({channels}),
      grad_beta({channels}),
      channels_(channels),
      eps_(eps) {
    gamma.fill(1.0f);
}

Tensor InstanceNorm2d::forward(const Tensor& x, int slot, bool grad_mode) {
    int n = x.shape[0], c = x.shape[1], hw = x.shape[2] * x.shape[3];
    if (c != channels_)
        throw ConfigError("instance norm: expected " + std::to_string(channels_) +
                          " channels, got shape " + x.shape_str());
    Tensor out(x.shape);
    Cache cache;
    cache.x_hat = Tensor(x.shape);
    cache.inv_std.resize(static_cast<size_t>(n) * c);
    for (int i = 0; i < n; ++i) {
        for (int ch = 0; ch < c; ++ch) {
            const float* xs = x.data.data() + (static_cast<size_t>(i) * c + ch) * hw;
            float* hs = cache.x_hat.data.data() + (static_cast<size_t>(i) * c + ch) * hw;
            float* os = out.data.data() + (static_cast<size_t>(i) * c + ch) * hw;
            double mean = 0.0;
            for (int p = 0; p < hw; ++p) mean += xs[p];
            mean /= hw;
            double var = 0.0;
            for (int p = 0; p < hw; ++p) {
                double d = xs[p] - mean;
                var += d * d;
            }
            var /= hw;
            float inv_std = 1.0f / std::sqrt(static_cast<float>(var) + eps_);
            cache.inv_std[static_cast<size_t>(i) * c + ch] = inv_std;
            float g = gamma.data[ch], b = beta.data[ch];
            for (int p = 0; p < hw; ++p) {
                float xh = (xs[p] - static_cast<float>(mean)) * inv_std;
                hs[p] = xh;
                os[p] = g * xh + b;
            }
        }
    }
    if (grad_mode) slot_ref(cache_, slot) = std::move(cache);
    return out;
}

Tensor InstanceNorm2d::backward(const Tensor& grad_out, int slot) {
    const Cache& cache = cache_.at(slot);
    const Tensor& x_hat = cache.x_hat;
    int n = grad_out.shape[0], c = grad_out.shape[1];
    int hw = grad_out.shape[2] * grad_out.shape[3];
    Tensor grad_in(grad_out.shape);
    for (int i = 0; i < n; ++i) {
        for (int ch = 0; ch < c; ++ch) {
            const float* gs = grad_out.data.data() + (static_cast<size_t>(i) * c + ch) * hw;
            const float* hs = x_hat.data.data() + (static_cast<size_t>(i) * c + ch) * hw;
            float* out = grad_in.data.data() + (static_cast<size_t>(i) * c + ch) * hw;
            float g = gamma.data[ch];
            double sum_dy = 0.0, sum_dy_xhat = 0.0;
            for (int p = 0; p < hw; ++p) {
                sum_dy += gs[p];
                sum_dy_xhat += static_cast<double>(gs[p]) * hs[p];
            }
            grad_beta.data[ch] += static_cast<float>(sum_dy);
            grad_gamma.data[ch] += static_cast<float>(sum_dy_xhat);
            float inv_std = cache.inv_std[static_cast<size_t>(i) * c + ch];
            float k = g * inv_std / hw;
            for (int p = 0; p < hw; ++p)
                out[p] = k * (hw * gs[p] - static_cast<float>(sum_dy) -
                              hs[p] * static_cast<float>(sum_dy_xhat));
        }
    }
    return grad_in;
}

void InstanceNorm2d::collect_params(const std::string& prefix, std::vector<ParamRef>& out) {
    out.push_back({prefix + ".gamma", &gamma, &grad_gamma});
    out.push_back({prefix + ".beta", &beta, &grad_beta});
}

void InstanceNorm2d::zero_grad() {
    grad_gamma.zero();
    grad_beta.zero();
}

BatchNorm2d::BatchNorm2d(int channels, float eps, float momentum)
    : gamma({channels}),
      beta({channels}),
      grad_gamma({channels}),
      grad_beta({channels}),
      running_mean({channels}),
      running_var({channels}),
      channels_(channels),
      eps_(eps),
      momentum_(momentum) {
    gamma.fill(1.0f);
    running_var.fill(1.0f);
}

Tensor BatchNorm2d::forward(const Tensor& x, int slot, bool grad_mode) {
    int n = x.shape[0], c = x.shape[1], hw = x.shape[2] * x.shape[3];
    if (c != channels_)
        throw ConfigError("batch norm: expected " + std::to_string(channels_) +
                          " channels, got shape " + x.shape_str());
    Tensor out(x.shape);
    Cache cache;
    cache.x_hat = Tensor(x.shape);
    cache.inv_std.resize(c);
    size_t stride_n = static_cast<size_t>(c) * hw;
    for (int ch = 0; ch < c; ++ch) {
        float mean, var;
        if (training_) {
            double m = 0.0;
            for (int i = 0; i < n; ++i) {
                const float* xs = x.data.data() + i * stride_n + static_cast<size_t>(ch) * hw;
                for (int p = 0; p < hw; ++p) m += xs[p];
            }
            m /= static_cast<double>(n) * hw;
            double v = 0.0;
            for (int i = 0; i < n; ++i) {
                const float* xs = x.data.data() + i * stride_n + static_cast<size_t>(ch) * hw;
                for (int p = 0; p < hw; ++p) {
                    double d = xs[p] - m;
                    v += d * d;
                }
            }
            v /= static_cast<double>(n) * hw;
            mean = static_cast<float>(m);
            var = static_cast<float>(v);
            running_mean.data[ch] = (1 - momentum_) * running_mean.data[ch] + momentum_ * mean;
            running_var.data[ch] = (1 - momentum_) * running_var.data[ch] + momentum_ * var;
        } else {
            mean = running_mean.data[ch];
            var = running_var.data[ch];
        }
        float inv_std = 1.0f / std::sqrt(var + eps_);
        cache.inv_std[ch] = inv_std;
        float g = gamma.data[ch], b = beta.data[ch];
        for (int i = 0; i < n; ++i) {
            const float* xs = x.data.data() + i * stride_n + static_cast<size_t>(ch) * hw;
            float* hs = cache.x_hat.data.data() + i * stride_n + static_cast<size_t>(ch) * hw;
            float* os = out.data.data() + i * stride_n + static_cast<size_t>(ch) * hw;
            for (int p = 0; p < hw; ++p) {
                float xh = (xs[p] - mean) * inv_std;
                hs[p] = xh;
                os[p] = g * xh + b;
            }
        }
    }
    if (grad_mode) slot_ref(cache_, slot) = std::move(cache);
    return out;
}

Tensor BatchNorm2d::backward(const Tensor& grad_out, int slot) {
    const Cache& cache = cache_.at(slot);
    int n = grad_out.shape[0], c = grad_out.shape[1];
    int hw = grad_out.shape[2] * grad_out.shape[3];
    size_t stride_n = static_cast<size_t>(c) * hw;
    int m = n * hw;
    Tensor grad_in(grad_out.shape);
    for (int ch = 0; ch < c; ++ch) {
        double sum_dy = 0.0, sum_dy_xhat = 0.0;
        for (int i = 0; i < n; ++i) {
            const float* gs = grad_out.data.data() + i * stride_n + static_cast<size_t>(ch) * hw;
            const float* hs = cache.x_hat.data.data() + i * stride_n + static_cast<size_t>(ch) * hw;
            for (int p = 0; p < hw; ++p) {
                sum_dy += gs[p];
                sum_dy_xhat += static_cast<double>(gs[p]) * hs[p];
            }
        }
        grad_beta.data[ch] += static_cast<float>(sum_dy);
        grad_gamma.data[ch] += static_cast<float>(sum_dy_xhat);
        float g = gamma.data[ch];
        float inv_std = cache.inv_std[ch];
        for (int i = 0; i < n; ++i) {
            const float* gs = grad_out.data.data() + i * stride_n + static_cast<size_t>(ch) * hw;
            const float* hs = cache.x_hat.data.data() + i * stride_n + static_cast<size_t>(ch) * hw;
            float* os = grad_in.data.data() + i * stride_n + static_cast<size_t>(ch) * hw;
            if (training_) {
                float k = g * inv_std / m;
                for (int p = 0; p < hw; ++p)
                    os[p] = k * (m * gs[p] - static_cast<float>(sum_dy) -
                                 hs[p] * static_cast<float>(sum_dy_xhat));
            } else {
                for (int p = 0; p < hw; ++p) os[p] = g * inv_std * gs[p];
            }
        }
    }
    return grad_in;
}

void BatchNorm2d::collect_params(const std::string& prefix, std::vector<ParamRef>& out) {
    out.push_back({prefix + ".gamma", &gamma, &grad_gamma});
    out.push_back({prefix + ".beta", &beta, &grad_beta});
    out.push_back({prefix + ".running_mean", &running_mean, nullptr});
    out.push_back({prefix + ".running_var", &running_var, nullptr});
}

void BatchNorm2d::zero_grad() {
    grad_gamma.zero();
    grad_beta.zero();
}

Tensor ReLU::forward(const Tensor& x, int slot, bool grad_mode) {
    Tensor out(x.shape);
    for (size_t i = 0; i < x.data.size(); ++i) out.data[i] = x.data[i] > 0 ? x.data[i] : 0.0f;
    if (grad_mode) slot_ref(cached_input_, slot) = x;
    return out;
}

Tensor ReLU::backward(const Tensor& grad_out, int slot) {
    const Tensor& x = cached_input_.at(slot);
    Tensor grad_in(grad_out.shape);
    for (size_t i = 0; i < grad_out.data.size(); ++i)
        grad_in.data[i] = x.data[i] > 0 ? grad_out.data[i] : 0.0f;
    return grad_in;
}

Tensor LeakyReLU::forward(const Tensor& x, int slot, bool grad_mode) {
    Tensor out(x.shape);
    for (size_t i = 0; i < x.data.size(); ++i)
        out.data[i] = x.data[i] > 0 ? x.data[i] : slope_ * x.data[i];
    if (grad_mode) slot_ref(cached_input_, slot) = x;
    return out;
}

Tensor LeakyReLU::backward(const Tensor& grad_out, int slot) {
    const Tensor& x = cached_input_.at(slot);
    Tensor grad_in(grad_out.shape);
    for (size_t i = 0; i < grad_out.data.size(); ++i)
        grad_in.data[i] = x.data[i] > 0 ? grad_out.data[i] : slope_ * grad_out.data[i];
    return grad_in;
}

Tensor Tanh::forward(const Tensor& x, int slot, bool grad_mode) {
    Tensor out(x.shape);
    for (size_t i = 0; i < x.data.size(); ++i) out.data[i] = std::tanh(x.data[i]);
    if (grad_mode) slot_ref(cached_output_, slot) = out;
    return out;
}

Tensor Tanh::backward(const Tensor& grad_out, int slot) {
    const Tensor& y = cached_output_.at(slot);
    Tensor grad_in(grad_out.shape);
    for (size_t i = 0; i < grad_out.data.size(); ++i)
        grad_in.data[i] = grad_out.data[i] * (1.0f - y.data[i] * y.data[i]);
    return grad_in;
}

Tensor Sigmoid::forward(const Tensor& x, int slot, bool grad_mode) {
    Tensor out(x.shape);
    for (size_t i = 0; i < x.data.size(); ++i) out.data[i] = 1.0f / (1.0f + std::exp(-x.data[i]));
    if (grad_mode) slot_ref(cached_output_, slot) = out;
    return out;
}

Tensor Sigmoid::backward(const Tensor& grad_out, int slot) {
    const Tensor& y = cached_output_.at(slot);
    Tensor grad_in(grad_out.shape);
    for (size_t i = 0; i < grad_out.data.size(); ++i)
        grad_in.data[i] = grad_out.data[i] * y.data[i] * (1.0f - y.data[i]);
    return grad_in;
}

Tensor MaxPool2d::forward(const Tensor& x, int slot, bool grad_mode) {
    int n = x.shape[0], c = x.shape[1], h = x.shape[2], w = x.shape[3];
    if (h % kernel_ != 0 || w % kernel_ != 0)
        throw ConfigError("maxpool: input " + x.shape_str() + " not divisible by kernel " +
                          std::to_string(kernel_));
    int oh = h / kernel_, ow = w / kernel_;
    Tensor out({n, c, oh, ow});
    Cache cache;
    cache.shape = x.shape;
    cache.argmax.resize(out.data.size());
    for (int i = 0; i < n; ++i) {
        for (int ch = 0; ch < c; ++ch) {
            const float* xs = x.data.data() + (static_cast<size_t>(i) * c + ch) * h * w;
            size_t obase = (static_cast<size_t>(i) * c + ch) * oh * ow;
            for (int oy = 0; oy < oh; ++oy) {
                for (int ox = 0; ox < ow; ++ox) {
                    int best = (oy * kernel_) * w + ox * kernel_;
                    float bv = xs[best];
                    for (int ky = 0; ky < kernel_; ++ky) {
                        for (int kx = 0; kx < kernel_; ++kx) {
                            int idx = (oy * kernel_ + ky) * w + ox * kernel_ + kx;
                            if (xs[idx] > bv) {
                                bv = xs[idx];
                                best = idx;
                            }
                        }
                    }
                    out.data[obase + oy * ow + ox] = bv;
                    cache.argmax[obase + oy * ow + ox] = best;
                }
            }
        }
    }
    if (grad_mode) slot_ref(cache_, slot) = std::move(cache);
    return out;
}

Tensor MaxPool2d::backward(const Tensor& grad_out, int slot) {
    const Cache& cache = cache_.at(slot);
    int n = cache.shape[0], c = cache.shape[1], h = cache.shape[2], w = cache.shape[3];
    int oh = grad_out.shape[2], ow = grad_out.shape[3];
    Tensor grad_in(cache.shape);
    grad_in.zero();
    for (int i = 0; i < n; ++i) {
        for (int ch = 0; ch < c; ++ch) {
            float* gx = grad_in.data.data() + (static_cast<size_t>(i) * c + ch) * h * w;
            size_t obase = (static_cast<size_t>(i) * c + ch) * oh * ow;
            for (int p = 0; p < oh * ow; ++p)
                gx[cache.argmax[obase + p]] += grad_out.data[obase + p];
        }
    }
    return grad_in;
}

Tensor UpsampleNearest2x::forward(const Tensor& x, int slot, bool grad_mode) {
    int n = x.shape[0], c = x.shape[1], h = x.shape[2], w = x.shape[3];
    Tensor out({n, c, 2 * h, 2 * w});
    for (int i = 0; i < n; ++i) {
        for (int ch = 0; ch < c; ++ch) {
            const float* xs = x.data.data() + (static_cast<size_t>(i) * c + ch) * h * w;
            float* os = out.data.data() + (static_cast<size_t>(i) * c + ch) * 4 * h * w;
            for (int y = 0; y < 2 * h; ++y)
                for (int xx = 0; xx < 2 * w; ++xx)
                    os[y * 2 * w + xx] = xs[(y / 2) * w + xx / 2];
        }
    }
    if (grad_mode) slot_ref(cached_shape_, slot) = x.shape;
    return out;
}

Tensor UpsampleNearest2x::backward(const Tensor& grad_out, int slot) {
    const std::vector<int>& shape = cached_shape_.at(slot);
    int n = shape[0], c = shape[1], h = shape[2], w = shape[3];
    Tensor grad_in(shape);
    grad_in.zero();
    for (int i = 0; i < n; ++i) {
        for (int ch = 0; ch < c; ++ch) {
            float* gx = grad_in.data.data() + (static_cast<size_t>(i) * c + ch) * h * w;
            const float* gs = grad_out.data.data() + (static_cast<size_t>(i) * c + ch) * 4 * h * w;
            for (int y = 0; y < 2 * h; ++y)
                for (int xx = 0; xx < 2 * w; ++xx) gx[(y / 2) * w + xx / 2] += gs[y * 2 * w + xx];
        }
    }
    return grad_in;
}

Tensor GlobalAvgPool::forward(const Tensor& x, int slot, bool grad_mode) {
    int n = x.shape[0], c = x.shape[1], hw = x.shape[2] * x.shape[3];
    Tensor out({n, c});
    for (int i = 0; i < n; ++i) {
        for (int ch = 0; ch < c; ++ch) {
            const float* xs = x.data.data() + (static_cast<size_t>(i) * c + ch) * hw;
            double s = 0.0;
            for (int p = 0; p < hw; ++p) s += xs[p];
            out.data[static_cast<size_t>(i) * c + ch] = static_cast<float>(s / hw);
        }
    }
    if (grad_mode) slot_ref(cached_shape_, slot) = x.shape;
    return out;
}

Tensor GlobalAvgPool::backward(const Tensor& grad_out, int slot) {
    const std::vector<int>& shape = cached_shape_.at(slot);
    int n = shape[0], c = shape[1], hw = shape[2] * shape[3];
    Tensor grad_in(shape);
    for (int i = 0; i < n; ++i) {
        for (int ch = 0; ch < c; ++ch) {
            float g = grad_out.data[static_cast<size_t>(i) * c + ch] / hw;
            float* gx = grad_in.data.data() + (static_cast<size_t>(i) * c + ch) * hw;
            for (int p = 0; p < hw; ++p) gx[p] = g;
        }
    }
    return grad_in;
}

Layer* Sequential::add(const std::string& name, std::unique_ptr<Layer> layer) {
    layers_.push_back({name, std::move(layer)});
    return layers_.back().layer.get();
}

Tensor Sequential::forward(const Tensor& x, int slot, bool grad_mode) {
    Tensor cur = x;
    for (auto& named : layers_) cur = named.layer->forward(cur, slot, grad_mode);
    return cur;
}

Tensor Sequential::backward(const Tensor& grad_out, int slot) {
    Tensor cur = grad_out;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it)
        cur = it->layer->backward(cur, slot);
    return cur;
}

void Sequential::collect_params(const std::string& prefix, std::vector<ParamRef>& out) {
    for (auto& named : layers_) {
        std::string child = prefix.empty() ? named.name : prefix + "." + named.name;
        named.layer->collect_params(child, out);
    }
}

void Sequential::zero_grad() {
    for (auto& named : layers_) named.layer->zero_grad();
}

void Sequential::set_training(bool training) {
    for (auto& named : layers_) named.layer->set_training(training);
}

std::vector<ParamRef> Sequential::params() {
    std::vector<ParamRef> out;
    collect_params("", out);
    return out;
}

}  // namespace melanet::nn
