#include <doctest.h>

#include <cmath>
#include <vector>

#include "melanet/clf/focal.hpp"
#include "melanet/errors.hpp"
#include "melanet/rng.hpp"

using namespace melanet;
using clf::FocalLossParams;
using clf::focal_loss;
using clf::focal_loss_batch;
using clf::focal_loss_grad_p;

namespace {

// straight transcription of the definition, kept independent of the
// production code path
double oracle(double p, bool positive, double alpha, double gamma) {
    double p_t = positive ? p : 1.0 - p;
    double a_t = positive ? alpha : 1.0 - alpha;
    return -a_t * std::pow(1.0 - p_t, gamma) * std::log(p_t);
}

}  // namespace

TEST_CASE("matches the scalar definition on a parameter grid") {
    const double ps[] = {0.01, 0.1, 0.25, 0.5, 0.75, 0.9, 0.99};
    const double alphas[] = {0.1, 0.25, 0.5, 0.75};
    const double gammas[] = {0.0, 0.5, 1.0, 2.0, 5.0};
    for (double p : ps)
        for (double a : alphas)
            for (double g : gammas) {
                FocalLossParams params{a, g};
                CHECK(focal_loss(p, 1, params) ==
                      doctest::Approx(oracle(p, true, a, g)).epsilon(1e-12));
                CHECK(focal_loss(p, 0, params) ==
                      doctest::Approx(oracle(p, false, a, g)).epsilon(1e-12));
            }
}

TEST_CASE("paper operating point, hand-evaluated") {
    FocalLossParams params{0.25, 2.0};
    // -0.25 * (1-0.8)^2 * ln(0.8)
    CHECK(focal_loss(0.8, 1, params) == doctest::Approx(0.0022314355).epsilon(1e-9));
    // negative label mirrors: p_t = 0.2, alpha_t = 0.75
    CHECK(focal_loss(0.8, 0, params) ==
          doctest::Approx(-0.75 * 0.64 * std::log(0.2)).epsilon(1e-12));
}

TEST_CASE("gamma 0 reduces to alpha-weighted cross-entropy exactly") {
    Rng rng(2024);
    FocalLossParams params{0.3, 0.0};
    for (int i = 0; i < 200; ++i) {
        double p = rng.uniform(0.001, 0.999);
        CHECK(focal_loss(p, 1, params) == -0.3 * std::log(p));
        CHECK(focal_loss(p, 0, params) == -0.7 * std::log(1.0 - p));
    }
}

TEST_CASE("negative labels may be written as -1 or 0") {
    FocalLossParams params{0.25, 2.0};
    for (double p : {0.1, 0.5, 0.9}) {
        CHECK(focal_loss(p, -1, params) == focal_loss(p, 0, params));
        CHECK(focal_loss_grad_p(p, -1, params) == focal_loss_grad_p(p, 0, params));
    }
}

TEST_CASE("well-classified examples are down-weighted as gamma grows") {
    FocalLossParams ce{0.25, 0.0};
    FocalLossParams fl{0.25, 2.0};
    // confident correct prediction: focal term shrinks the loss a lot
    CHECK(focal_loss(0.95, 1, fl) < 0.01 * focal_loss(0.95, 1, ce));
    // hard example: shrinkage is mild
    CHECK(focal_loss(0.1, 1, fl) > 0.5 * focal_loss(0.1, 1, ce));
}

TEST_CASE("gradient matches central finite differences") {
    Rng rng(77);
    for (int trial = 0; trial < 500; ++trial) {
        double p = rng.uniform(0.05, 0.95);
        int y = static_cast<int>(rng.uniform_int(2));
        FocalLossParams params{rng.uniform(0.1, 0.9), rng.uniform(0.0, 4.0)};
        double h = 1e-6;
        double fd = (focal_loss(p + h, y, params) - focal_loss(p - h, y, params)) / (2 * h);
        double an = focal_loss_grad_p(p, y, params);
        CHECK(an == doctest::Approx(fd).epsilon(1e-5));
    }
}

TEST_CASE("gradient sign pushes p toward the label") {
    FocalLossParams params{0.25, 2.0};
    CHECK(focal_loss_grad_p(0.3, 1, params) < 0.0);  // raise p
    CHECK(focal_loss_grad_p(0.7, 0, params) > 0.0);  // lower p
}

TEST_CASE("batch is the mean of per-sample losses") {
    FocalLossParams params{0.25, 2.0};
    std::vector<double> p{0.2, 0.8, 0.55, 0.9};
    std::vector<int> y{0, 1, 1, 0};
    double expect = 0.0;
    for (size_t i = 0; i < p.size(); ++i) expect += focal_loss(p[i], y[i], params);
    expect /= 4.0;
    CHECK(focal_loss_batch(p, y, params) == doctest::Approx(expect).epsilon(1e-15));
}

TEST_CASE("invalid inputs are rejected") {
    FocalLossParams params{0.25, 2.0};
    CHECK_THROWS_AS(focal_loss(1.2, 1, params), TrainingError);
    CHECK_THROWS_AS(focal_loss(-0.1, 0, params), TrainingError);
    CHECK_THROWS_AS(focal_loss(0.5, 3, params), TrainingError);
    std::vector<double> p{0.5};
    std::vector<int> y{1, 0};
    CHECK_THROWS_AS(focal_loss_batch(p, y, params), TrainingError);
    CHECK_THROWS_AS(focal_loss_batch({}, {}, params), TrainingError);

    FocalLossParams bad_alpha{1.5, 2.0};
    FocalLossParams bad_gamma{0.25, -1.0};
    CHECK_THROWS_AS(bad_alpha.validate(), ConfigError);
    CHECK_THROWS_AS(bad_gamma.validate(), ConfigError);
}

TEST_CASE("extreme probabilities stay finite via clamping") {
    FocalLossParams params{0.25, 2.0};
    CHECK(std::isfinite(focal_loss(0.0, 1, params)));
    CHECK(std::isfinite(focal_loss(1.0, 0, params)));
    CHECK(std::isfinite(focal_loss_grad_p(0.0, 1, params)));
    CHECK(focal_loss(1.0, 1, params) == doctest::Approx(0.0).epsilon(1e-10));
}
