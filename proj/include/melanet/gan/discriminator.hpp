#pragma once

#include <string>
#include <vector>

#include "melanet/nn/layers.hpp"
#include "melanet/rng.hpp"

namespace melanet::gan {

struct DiscriminatorSpec {
    int receptive_field = 70;  // one of 16, 34, 70, 142
    int base_filters = 64;
    std::string normalization = "instance";
    int in_channels = 3;

    void validate() const;
    int num_stride2_layers() const;  // derived from receptive_field
};

// PatchGAN: stacked stride-2 convolutions, a stride-1 pre-final
// convolution, then a 1-channel stride-1 convolution into a sigmoid,
// yielding one (0,1) score per receptive-field patch.
nn::Sequential build_patch_discriminator(const DiscriminatorSpec& spec, Rng& rng);

// Smallest square input side producing at least a 1x1 score map.
int min_discriminator_input(const DiscriminatorSpec& spec);

}  // namespace melanet::gan
