#pragma once

#include <string>

#include "melanet/image.hpp"
#include "melanet/tensor.hpp"

namespace melanet::gan {

enum class GanLossForm { log, least_squares };

GanLossForm loss_form_from_name(const std::string& name);
std::string loss_form_name(GanLossForm form);

// Eq. (2)/(3) objective: mean log D(real) + mean log(1 - D(fake)).
// The discriminator ascends this; scores are post-sigmoid and clamped by
// eps inside the logs.
double adversarial_loss(const Tensor& scores_real, const Tensor& scores_fake);

// Loss the discriminator descends. For the log form this is the negated
// Eq. (2) objective; optional outputs receive d(loss)/d(score).
double discriminator_loss(const Tensor& scores_real, const Tensor& scores_fake, GanLossForm form,
                          Tensor* grad_real = nullptr, Tensor* grad_fake = nullptr);

// Loss the generator descends on its fake scores: -mean log D(fake) for
// the log form (non-saturating), mean (D(fake)-1)^2 / 2 for least squares.
double generator_adversarial_loss(const Tensor& scores_fake, GanLossForm form,
                                  Tensor* grad_fake = nullptr);

// Mean absolute error; optional gradient with respect to `a`.
double l1_mean(const Tensor& a, const Tensor& b, Tensor* grad_a = nullptr);

// Eq. (4): sum of the two reconstruction directions.
double cycle_consistency_loss(const Tensor& original_b, const Tensor& reconstructed_b,
                              const Tensor& original_m, const Tensor& reconstructed_m);
double cycle_consistency_loss(const ImageTensor& original_b, const ImageTensor& reconstructed_b,
                              const ImageTensor& original_m, const ImageTensor& reconstructed_m);

// Eq. (1): adv_bm + adv_mb + lambda_cyc * cyc.
double total_objective(double adv_bm, double adv_mb, double cyc, double lambda_cyc);

}  // namespace melanet::gan
