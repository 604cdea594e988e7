#pragma once

#include <vector>

namespace melanet::clf {

struct FocalLossParams {
    double alpha = 0.25;
    double gamma = 2.0;

    void validate() const;  // alpha in [0,1], gamma >= 0
};

// Eq.-style focal loss on the predicted probability of class 1:
//   FL(p_t) = -alpha_t (1 - p_t)^gamma log(p_t)
// with p_t = p when y is positive, 1-p otherwise, and alpha_t mirrored the
// same way. Labels may be {0,1} or {-1,1}; p is clamped to
// [eps, 1-eps] inside the log. At gamma = 0 this is alpha-weighted
// cross-entropy.
double focal_loss(double p, int y, const FocalLossParams& params);

// d(loss)/dp at the same point (analytic, for backprop through softmax).
double focal_loss_grad_p(double p, int y, const FocalLossParams& params);

// Mean over a batch; sizes must match.
double focal_loss_batch(const std::vector<double>& p, const std::vector<int>& y,
                        const FocalLossParams& params);

}  // namespace melanet::clf
