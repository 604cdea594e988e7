#include "melanet/benchmark.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "melanet/errors.hpp"
#include "melanet/rng.hpp"

namespace melanet {

void BenchmarkConfig::validate() const {
    if (image_side < 8) throw ConfigError("benchmark: image_side must be >= 8");
    if (n_minority < 1 || n_majority < n_minority)
        throw ConfigError("benchmark: require n_majority >= n_minority >= 1");
    if (domain_gap < 0.0 || domain_gap > 1.0)
        throw ConfigError("benchmark: domain_gap must be in [0,1]");
}

namespace {

constexpr double kBaseHue = 0.30;
constexpr double kHueGapCoeff = 0.12;
constexpr double kHueJitter = 0.035;
constexpr double kIrrLo = 0.04, kIrrHi = 0.16;
constexpr double kIrrGapCoeff = 0.12;

struct BlobParams {
    float cx, cy;        // center, px
    float r0;            // mean radius, px
    float aspect;        // ellipse minor/major ratio
    float theta;         // ellipse rotation
    float irr;           // boundary irregularity amplitude
    float wave_amp[4];   // harmonics k=2..5
    float wave_phase[4];
    float hue, sat, val;
    float bg_level;
};

BlobParams draw_params(const BenchmarkConfig& cfg, ClassLabel label, int index) {
    std::string stream = std::string("bench:") + label_name(label) + ":" + std::to_string(index);
    Rng rng(derive_seed(cfg.seed, stream));
    double gap = label == ClassLabel::malignant ? cfg.domain_gap : 0.0;

    BlobParams p;
    float side = static_cast<float>(cfg.image_side);
    p.cx = side * static_cast<float>(rng.uniform(0.42, 0.58));
    p.cy = side * static_cast<float>(rng.uniform(0.42, 0.58));
    p.r0 = side * static_cast<float>(rng.uniform(0.20, 0.30));
    p.aspect = static_cast<float>(rng.uniform(0.70, 1.00));
    p.theta = static_cast<float>(rng.uniform(0.0, std::numbers::pi));
    p.irr = static_cast<float>(rng.uniform(kIrrLo, kIrrHi) + kIrrGapCoeff * gap);
    float norm = 0.0f;
    for (int k = 0; k < 4; ++k) {
        p.wave_amp[k] = static_cast<float>(rng.uniform(-1.0, 1.0));
        p.wave_phase[k] = static_cast<float>(rng.uniform(0.0, 2.0 * std::numbers::pi));
        norm += std::fabs(p.wave_amp[k]);
    }
    if (norm > 0)
        for (int k = 0; k < 4; ++k) p.wave_amp[k] /= norm;
    p.hue = static_cast<float>(kBaseHue + kHueGapCoeff * gap + rng.normal(0.0, kHueJitter));
    p.sat = static_cast<float>(rng.uniform(0.60, 0.85));
    p.val = static_cast<float>(rng.uniform(0.55, 0.80));
    p.bg_level = static_cast<float>(rng.uniform(28.0, 42.0));
    return p;
}

}  // namespace

double benchmark_class_hue(const BenchmarkConfig& config, ClassLabel label) {
    double gap = label == ClassLabel::malignant ? config.domain_gap : 0.0;
    return kBaseHue + kHueGapCoeff * gap;
}

ImageTensor render_benchmark_image(const BenchmarkConfig& config, ClassLabel label, int index) {
    BlobParams p = draw_params(config, label, index);
    std::string stream = std::string("bench_noise:") + label_name(label) + ":" +
                         std::to_string(index);
    Rng noise(derive_seed(config.seed, stream));

    ImageTensor img(config.image_side, config.image_side, 3, RangeTag::raw_0_255);
    float ct = std::cos(p.theta), st = std::sin(p.theta);
    float r_blob, g_blob, b_blob;
    hsv_to_rgb(p.hue - std::floor(p.hue), p.sat, p.val, r_blob, g_blob, b_blob);

    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            float dy = static_cast<float>(y) - p.cy;
            float dx = static_cast<float>(x) - p.cx;
            // rotate into ellipse frame, stretch minor axis
            float ex = ct * dx + st * dy;
            float ey = (-st * dx + ct * dy) / p.aspect;
            float d = std::sqrt(ex * ex + ey * ey);
            float phi = std::atan2(ey, ex);
            float rb = 1.0f;
            for (int k = 0; k < 4; ++k)
                rb += p.irr * p.wave_amp[k] * std::sin((k + 2) * phi + p.wave_phase[k]);
            rb *= p.r0;
            float alpha = std::clamp(0.5f + (rb - d) / 1.5f, 0.0f, 1.0f);

            // luminance-only noise keeps the background achromatic
            float ln = static_cast<float>(noise.uniform(-8.0, 8.0));
            float bg = std::clamp(p.bg_level + ln, 0.0f, 255.0f);
            float shade = 1.0f - 0.12f * std::min(d / std::max(rb, 1.0f), 1.0f);
            float in_noise = 1.0f + 0.06f * static_cast<float>(noise.uniform(-1.0, 1.0));
            float rr = 255.0f * r_blob * shade * in_noise;
            float gg = 255.0f * g_blob * shade * in_noise;
            float bb = 255.0f * b_blob * shade * in_noise;
            img.at(y, x, 0) = std::clamp(alpha * rr + (1 - alpha) * bg, 0.0f, 255.0f);
            img.at(y, x, 1) = std::clamp(alpha * gg + (1 - alpha) * bg, 0.0f, 255.0f);
            img.at(y, x, 2) = std::clamp(alpha * bb + (1 - alpha) * bg, 0.0f, 255.0f);
        }
    }
    return img;
}

BenchmarkSplit generate_benchmark(const BenchmarkConfig& config) {
    config.validate();
    BenchmarkSplit split;
    split.train.order_seed = config.seed;
    split.test.order_seed = config.seed;

    auto emit = [&](ClassLabel label, int count, const char* prefix) {
        int train_n = static_cast<int>(std::llround(0.7 * count));
        for (int i = 0; i < count; ++i) {
            LabelledSample s;
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%s_%04d", prefix, i);
            s.id = buf;
            s.label = label;
            s.provenance = Provenance::original;
            s.image = render_benchmark_image(config, label, i);
            (i < train_n ? split.train : split.test).samples.push_back(std::move(s));
        }
    };
    emit(ClassLabel::benign, config.n_majority, "bench_b");
    emit(ClassLabel::malignant, config.n_minority, "bench_m");
    return split;
}

}  // namespace melanet
