#include "melanet/gan/losses.hpp"

#include <algorithm>
#include <cmath>

#include "melanet/errors.hpp"

namespace melanet::gan {

namespace {

constexpr double kEps = 1e-7;

double clamp_score(double s) { return std::clamp(s, kEps, 1.0 - kEps); }

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (a.shape != b.shape)
        throw ConfigError(std::string(what) + ": shape mismatch " + a.shape_str() + " vs " +
                          b.shape_str());
}

}  // namespace

GanLossForm loss_form_from_name(const std::string& name) {
    if (name == "log") return GanLossForm::log;
    if (name == "least_squares") return GanLossForm::least_squares;
    throw ConfigError("unknown gan loss form '" + name + "' (expected log or least_squares)");
}

std::string loss_form_name(GanLossForm form) {
    return form == GanLossForm::log ? "log" : "least_squares";
}

double adversarial_loss(const Tensor& scores_real, const Tensor& scores_fake) {
    require_same_shape(scores_real, scores_fake, "adversarial_loss");
    size_t n = scores_real.data.size();
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i) {
        acc += std::log(clamp_score(scores_real.data[i]));
        acc += std::log(1.0 - clamp_score(scores_fake.data[i]));
    }
    return acc / static_cast<double>(n);
}

double discriminator_loss(const Tensor& scores_real, const Tensor& scores_fake, GanLossForm form,
                          Tensor* grad_real, Tensor* grad_fake) {
    require_same_shape(scores_real, scores_fake, "discriminator_loss");
    size_t n = scores_real.data.size();
    double inv_n = 1.0 / static_cast<double>(n);
    if (grad_real) *grad_real = Tensor(scores_real.shape);
    if (grad_fake) *grad_fake = Tensor(scores_fake.shape);

    double loss = 0.0;
    for (size_t i = 0; i < n; ++i) {
        double r = clamp_score(scores_real.data[i]);
        double f = clamp_score(scores_fake.data[i]);
        if (form == GanLossForm::log) {
            loss += -(std::log(r) + std::log(1.0 - f));
            if (grad_real) grad_real->data[i] = static_cast<float>(-inv_n / r);
            if (grad_fake) grad_fake->data[i] = static_cast<float>(inv_n / (1.0 - f));
        } else {
            double dr = r - 1.0;
            loss += 0.5 * (dr * dr + f * f);
            if (grad_real) grad_real->data[i] = static_cast<float>(inv_n * dr);
            if (grad_fake) grad_fake->data[i] = static_cast<float>(inv_n * f);
        }
    }
    return loss * inv_n;
}

double generator_adversarial_loss(const Tensor& scores_fake, GanLossForm form, Tensor* grad_fake) {
    size_t n = scores_fake.data.size();
    double inv_n = 1.0 / static_cast<double>(n);
    if (grad_fake) *grad_fake = Tensor(scores_fake.shape);

    double loss = 0.0;
    for (size_t i = 0; i < n; ++i) {
        double f = clamp_score(scores_fake.data[i]);
        if (form == GanLossForm::log) {
            loss += -std::log(f);
            if (grad_fake) grad_fake->data[i] = static_cast<float>(-inv_n / f);
        } else {
            double df = f - 1.0;
            loss += 0.5 * df * df;
            if (grad_fake) grad_fake->data[i] = static_cast<float>(inv_n * df);
        }
    }
    return loss * inv_n;
}

double l1_mean(const Tensor& a, const Tensor& b, Tensor* grad_a) {
    require_same_shape(a, b, "l1_mean");
    size_t n = a.data.size();
    double inv_n = 1.0 / static_cast<double>(n);
    if (grad_a) *grad_a = Tensor(a.shape);
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i) {
        double d = static_cast<double>(a.data[i]) - b.data[i];
        acc += std::fabs(d);
        if (grad_a)
            grad_a->data[i] = static_cast<float>(d > 0 ? inv_n : (d < 0 ? -inv_n : 0.0));
    }
    return acc * inv_n;
}

double cycle_consistency_loss(const Tensor& original_b, const Tensor& reconstructed_b,
                              const Tensor& original_m, const Tensor& reconstructed_m) {
    return l1_mean(original_b, reconstructed_b) + l1_mean(original_m, reconstructed_m);
}

double cycle_consistency_loss(const ImageTensor& original_b, const ImageTensor& reconstructed_b,
                              const ImageTensor& original_m, const ImageTensor& reconstructed_m) {
    return cycle_consistency_loss(image_to_chw(original_b), image_to_chw(reconstructed_b),
                                  image_to_chw(original_m), image_to_chw(reconstructed_m));
}

double total_objective(double adv_bm, double adv_mb, double cyc, double lambda_cyc) {
    return adv_bm + adv_mb + lambda_cyc * cyc;
}

}  // namespace melanet::gan
