#pragma once

#include <cstdint>

#include "melanet/dataset.hpp"

namespace melanet {

// Deterministic two-domain toy dataset: both classes are colored soft blobs
// on a gray background drawn from one parametric family; domain_gap morphs
// the minority class's hue and boundary irregularity away from the majority.
// At domain_gap=0 the two classes are the same distribution.
struct BenchmarkConfig {
    int image_side = 64;
    int n_majority = 400;  // benign
    int n_minority = 100;  // malignant
    double domain_gap = 0.5;  // in [0,1]
    uint64_t seed = 0;

    void validate() const;  // throws ConfigError
};

struct BenchmarkSplit {
    LabelledDataset train;
    LabelledDataset test;
};

// Stratified 70/30 train/test split, deterministic under seed. Samples are
// generated independently keyed by (seed, class, index).
BenchmarkSplit generate_benchmark(const BenchmarkConfig& config);

// Single benchmark image, exposed for the hue-statistic tests.
ImageTensor render_benchmark_image(const BenchmarkConfig& config, ClassLabel label, int index);

// Class-conditional hue the generator aims at (the translation target
// statistic used by training-progress checks).
double benchmark_class_hue(const BenchmarkConfig& config, ClassLabel label);

}  // namespace melanet
