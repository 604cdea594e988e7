#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "melanet/augment.hpp"
#include "melanet/benchmark.hpp"
#include "melanet/clf/focal.hpp"
#include "melanet/clf/model.hpp"
#include "melanet/clf/trainer.hpp"
#include "melanet/gan/trainer.hpp"

namespace melanet::pipeline {

enum class PipelineMode { melanet, baseline_plain, baseline_augment };

std::string mode_name(PipelineMode mode);
PipelineMode mode_from_name(const std::string& name);

// Flag overrides that win over the config file.
struct CliOverrides {
    std::optional<std::string> mode;
    std::optional<uint64_t> seed;
    std::optional<std::string> out_dir;
};

struct ExperimentConfig {
    PipelineMode mode = PipelineMode::melanet;
    uint64_t seed = 0;
    std::filesystem::path out_dir = "experiment";
    int image_side = 64;
    double threshold = 0.5;
    int explain_count = 4;  // test samples given saliency maps in the explain stage

    // exactly one dataset source
    std::optional<std::filesystem::path> train_manifest;
    std::optional<std::filesystem::path> test_manifest;
    std::optional<BenchmarkConfig> benchmark;

    gan::GeneratorSpec generator;
    gan::DiscriminatorSpec discriminator;
    gan::CycleGanConfig translation;

    clf::ClassifierSpec classifier;
    clf::FocalLossParams focal;
    clf::ClassifierTrainConfig classifier_train;

    AugmentationSpec augmentation;  // baseline_augment only

    void validate() const;
    nlohmann::json to_json() const;  // fully resolved snapshot
    static ExperimentConfig from_json(const nlohmann::json& j);
    static ExperimentConfig load(const std::filesystem::path& path,
                                 const CliOverrides& overrides = {});

    // Stable hash of the resolved snapshot; stamps reports and records.
    std::string fingerprint() const;

    uint64_t stage_seed(const std::string& stage) const;
};

}  // namespace melanet::pipeline
