#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "melanet/benchmark.hpp"
#include "melanet/metrics/metrics.hpp"
#include "melanet/pipeline/config.hpp"

namespace melanet::pipeline {

enum class Stage { prepare, train_translator, synthesize, train_classifier, evaluate, explain };

std::string stage_name(Stage stage);
Stage stage_from_name(const std::string& name);

// Stage order for a mode; baselines skip the translation stages.
std::vector<Stage> stages_for(PipelineMode mode);

// Fixed artifact layout inside one experiment directory.
struct ExperimentPaths {
    std::filesystem::path root;

    std::filesystem::path config_snapshot() const { return root / "config.snapshot"; }
    std::filesystem::path record() const { return root / "record.json"; }
    std::filesystem::path train_data() const { return root / "data" / "train"; }
    std::filesystem::path test_data() const { return root / "data" / "test"; }
    std::filesystem::path checkpoints() const { return root / "checkpoints"; }
    std::filesystem::path translator_checkpoint() const {
        return checkpoints() / "translator.ckpt";
    }
    std::filesystem::path classifier_checkpoint() const {
        return checkpoints() / "classifier.ckpt";
    }
    std::filesystem::path synthetic() const { return root / "synthetic"; }
    std::filesystem::path logs() const { return root / "logs"; }
    std::filesystem::path report() const { return root / "report"; }
    std::filesystem::path saliency() const { return report() / "saliency"; }
};

// Executes one stage against the experiment directory, checking that the
// artifacts it depends on exist, and updates record.json.
void run_stage(const ExperimentConfig& config, Stage stage);

// The full pipeline: the mode's stages chained in order. Equivalent to
// calling run_stage for each stage yourself.
metrics::EvalReport run_pipeline(const ExperimentConfig& config);

nlohmann::json read_record(const std::filesystem::path& experiment_dir);

// Comparison table (published reference rows + one row per experiment).
// When out_dir is non-empty also writes comparison.csv and roc_overlay.csv.
std::string report_across(const std::vector<std::filesystem::path>& experiment_dirs,
                          const std::filesystem::path& out_dir = {});

// `bench generate`: train/ and test/ snapshot directories under out_dir.
void generate_benchmark_dirs(const BenchmarkConfig& config,
                             const std::filesystem::path& out_dir);

}  // namespace melanet::pipeline
