#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "melanet/errors.hpp"
#include "melanet/pipeline/runner.hpp"

namespace {

using melanet::BenchmarkConfig;
using melanet::pipeline::CliOverrides;
using melanet::pipeline::ExperimentConfig;

struct CommonFlags {
    std::string config_path;
    std::string mode;
    uint64_t seed = 0;
    bool seed_set = false;
    std::string out_dir;
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool with_overrides) {
    cmd->add_option("--config", flags.config_path, "experiment config file (JSON)")
        ->required();
    if (with_overrides) {
        cmd->add_option("--mode", flags.mode, "pipeline mode override")
            ->check(CLI::IsMember({"melanet", "baseline_plain", "baseline_augment"}));
        cmd->add_option("--seed", flags.seed, "master seed override")
            ->each([&flags](const std::string&) { flags.seed_set = true; });
        cmd->add_option("--out", flags.out_dir, "output directory override");
    }
}

ExperimentConfig load_config(const CommonFlags& flags) {
    CliOverrides overrides;
    if (!flags.mode.empty()) overrides.mode = flags.mode;
    if (flags.seed_set) overrides.seed = flags.seed;
    if (!flags.out_dir.empty()) overrides.out_dir = flags.out_dir;
    return ExperimentConfig::load(flags.config_path, overrides);
}

BenchmarkConfig load_benchmark_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw melanet::ConfigError("cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw melanet::ConfigError(std::string("config file is not valid JSON: ") + e.what());
    }
    const nlohmann::json& b = j.contains("benchmark") ? j.at("benchmark") : j;
    BenchmarkConfig cfg;
    if (b.contains("image_side")) cfg.image_side = b.at("image_side").get<int>();
    if (b.contains("n_majority")) cfg.n_majority = b.at("n_majority").get<int>();
    if (b.contains("n_minority")) cfg.n_minority = b.at("n_minority").get<int>();
    if (b.contains("domain_gap")) cfg.domain_gap = b.at("domain_gap").get<double>();
    if (b.contains("seed")) cfg.seed = b.at("seed").get<uint64_t>();
    else if (j.contains("seed")) cfg.seed = j.at("seed").get<uint64_t>();
    cfg.validate();
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"two-stage imbalance-aware skin lesion classification pipeline"};
    app.require_subcommand(1);

    CommonFlags run_flags;
    CLI::App* run = app.add_subcommand("run", "execute the full pipeline");
    add_common(run, run_flags, true);

    CommonFlags stage_flags;
    std::string stage_arg;
    CLI::App* stage = app.add_subcommand("stage", "execute a single pipeline stage");
    stage->add_option("name", stage_arg, "stage name")->required();
    add_common(stage, stage_flags, true);

    std::vector<std::string> experiment_dirs;
    std::string report_out;
    CLI::App* report = app.add_subcommand("report", "compare experiment results");
    report->add_option("--experiments", experiment_dirs, "experiment directories")
        ->required()
        ->expected(-1);
    report->add_option("--out", report_out, "directory for comparison.csv and roc_overlay.csv");

    CLI::App* bench = app.add_subcommand("bench", "synthetic benchmark utilities");
    bench->require_subcommand(1);
    std::string bench_config;
    std::string bench_out = "benchmark";
    CLI::App* bench_gen = bench->add_subcommand("generate", "write a benchmark dataset");
    bench_gen->add_option("--config", bench_config, "benchmark config file (JSON)")->required();
    bench_gen->add_option("--out", bench_out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? melanet::exit_ok : melanet::exit_config_error;
    }

    try {
        if (run->parsed()) {
            ExperimentConfig cfg = load_config(run_flags);
            auto result = melanet::pipeline::run_pipeline(cfg);
            std::cout << "experiment " << cfg.out_dir.string() << " done: auc=" << result.auc
                      << " sensitivity=" << result.sensitivity << " fn=" << result.counts.fn
                      << "\n";
        } else if (stage->parsed()) {
            ExperimentConfig cfg = load_config(stage_flags);
            melanet::pipeline::run_stage(cfg, melanet::pipeline::stage_from_name(stage_arg));
            std::cout << "stage " << stage_arg << " done in " << cfg.out_dir.string() << "\n";
        } else if (report->parsed()) {
            std::vector<std::filesystem::path> dirs(experiment_dirs.begin(),
                                                    experiment_dirs.end());
            std::cout << melanet::pipeline::report_across(dirs, report_out) << "\n";
        } else if (bench_gen->parsed()) {
            BenchmarkConfig cfg = load_benchmark_config(bench_config);
            melanet::pipeline::generate_benchmark_dirs(cfg, bench_out);
            std::cout << "benchmark written to " << bench_out << "\n";
        }
    } catch (const melanet::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return melanet::exit_config_error;
    } catch (const melanet::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return melanet::exit_data_error;
    } catch (const melanet::TrainingError& e) {
        std::cerr << "training error: " << e.what() << "\n";
        return melanet::exit_training_error;
    } catch (const melanet::EvalError& e) {
        std::cerr << "evaluation error: " << e.what() << "\n";
        return melanet::exit_eval_error;
    }
    return melanet::exit_ok;
}
