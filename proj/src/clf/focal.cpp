#include "melanet/clf/focal.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "melanet/errors.hpp"

namespace melanet::clf {

namespace {

constexpr double kEps = 1e-7;

bool is_positive_label(int y) {
    if (y == 1) return true;
    if (y == 0 || y == -1) return false;
    throw TrainingError("focal loss: label " + std::to_string(y) +
                        " not in {-1,1} or {0,1}");
}

double check_probability(double p) {
    if (!(p >= 0.0 && p <= 1.0))
        throw TrainingError("focal loss: probability " + std::to_string(p) +
                            " outside [0,1]");
    return std::clamp(p, kEps, 1.0 - kEps);
}

}  // namespace

void FocalLossParams::validate() const {
    if (alpha < 0.0 || alpha > 1.0) throw ConfigError("focal loss: alpha must be in [0,1]");
    if (gamma < 0.0) throw ConfigError("focal loss: gamma must be >= 0");
}

double focal_loss(double p, int y, const FocalLossParams& params) {
    p = check_probability(p);
    bool pos = is_positive_label(y);
    double p_t = pos ? p : 1.0 - p;
    double alpha_t = pos ? params.alpha : 1.0 - params.alpha;
    return -alpha_t * std::pow(1.0 - p_t, params.gamma) * std::log(p_t);
}

double focal_loss_grad_p(double p, int y, const FocalLossParams& params) {
    p = check_probability(p);
    bool pos = is_positive_label(y);
    double p_t = pos ? p : 1.0 - p;
    double alpha_t = pos ? params.alpha : 1.0 - params.alpha;
    // d(loss)/d(p_t), then the chain through p_t = p or 1-p
    double d_pt = -alpha_t * std::pow(1.0 - p_t, params.gamma) / p_t;
    if (params.gamma > 0)
        d_pt += alpha_t * params.gamma * std::pow(1.0 - p_t, params.gamma - 1.0) *
                std::log(p_t);
    return pos ? d_pt : -d_pt;
}

double focal_loss_batch(const std::vector<double>& p, const std::vector<int>& y,
                        const FocalLossParams& params) {
    if (p.size() != y.size())
        throw TrainingError("focal loss: got " + std::to_string(p.size()) +
                            " probabilities for " + std::to_string(y.size()) + " labels");
    if (p.empty()) throw TrainingError("focal loss: empty batch");
    double acc = 0.0;
    for (size_t i = 0; i < p.size(); ++i) acc += focal_loss(p[i], y[i], params);
    return acc / static_cast<double>(p.size());
}

}  // namespace melanet::clf
