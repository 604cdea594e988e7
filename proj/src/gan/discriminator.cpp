#include "melanet/gan/discriminator.hpp"

#include <algorithm>
#include <memory>

#include "melanet/errors.hpp"

namespace melanet::gan {

using nn::BatchNorm2d;
using nn::Conv2d;
using nn::InstanceNorm2d;
using nn::LeakyReLU;
using nn::Sequential;
using nn::Sigmoid;

void DiscriminatorSpec::validate() const {
    num_stride2_layers();
    if (base_filters < 1) throw ConfigError("discriminator: base_filters must be >= 1");
    if (normalization != "instance" && normalization != "batch")
        throw ConfigError("discriminator: normalization must be instance or batch, got '" +
                          normalization + "'");
}

int DiscriminatorSpec::num_stride2_layers() const {
    switch (receptive_field) {
        case 16: return 1;
        case 34: return 2;
        case 70: return 3;
        case 142: return 4;
        default:
            throw ConfigError("discriminator: receptive_field " +
                              std::to_string(receptive_field) +
                              " unsupported (use 16, 34, 70 or 142)");
    }
}

int min_discriminator_input(const DiscriminatorSpec& spec) {
    // two stride-1 4x4 convs (pad 1) each shrink the map by one
    return (1 << spec.num_stride2_layers()) * 3;
}

nn::Sequential build_patch_discriminator(const DiscriminatorSpec& spec, Rng& rng) {
    spec.validate();
    auto make_norm = [&](int channels) -> std::unique_ptr<nn::Layer> {
        if (spec.normalization == "batch") return std::make_unique<BatchNorm2d>(channels);
        return std::make_unique<InstanceNorm2d>(channels);
    };
    auto width = [&](int i) {
        long long c = static_cast<long long>(spec.base_filters) << i;
        return static_cast<int>(std::min<long long>(c, 8LL * spec.base_filters));
    };

    Sequential net;
    int n = spec.num_stride2_layers();
    int prev = spec.in_channels;
    for (int i = 0; i < n; ++i) {
        std::string base = "conv" + std::to_string(i + 1);
        net.add(base, std::make_unique<Conv2d>(prev, width(i), 4, 2, 1, rng));
        if (i > 0) net.add(base + "_norm", make_norm(width(i)));
        net.add(base + "_act", std::make_unique<LeakyReLU>(0.2f));
        prev = width(i);
    }
    net.add("pre_final", std::make_unique<Conv2d>(prev, width(n), 4, 1, 1, rng));
    net.add("pre_final_norm", make_norm(width(n)));
    net.add("pre_final_act", std::make_unique<LeakyReLU>(0.2f));
    net.add("score", std::make_unique<Conv2d>(width(n), 1, 4, 1, 1, rng));
    net.add("score_act", std::make_unique<Sigmoid>());
    return net;
}

}  // namespace melanet::gan
