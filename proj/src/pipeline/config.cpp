#include "melanet/pipeline/config.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include "melanet/errors.hpp"
#include "melanet/rng.hpp"

namespace melanet::pipeline {

using nlohmann::json;

std::string mode_name(PipelineMode mode) {
    switch (mode) {
        case PipelineMode::melanet: return "melanet";
        case PipelineMode::baseline_plain: return "baseline_plain";
        case PipelineMode::baseline_augment: return "baseline_augment";
    }
    throw ConfigError("unknown pipeline mode value");
}

PipelineMode mode_from_name(const std::string& name) {
    if (name == "melanet") return PipelineMode::melanet;
    if (name == "baseline_plain") return PipelineMode::baseline_plain;
    if (name == "baseline_augment") return PipelineMode::baseline_augment;
    throw ConfigError("unknown pipeline mode '" + name +
                      "' (expected melanet, baseline_plain or baseline_augment)");
}

void ExperimentConfig::validate() const {
    bool has_manifests = train_manifest.has_value() || test_manifest.has_value();
    if (has_manifests && benchmark.has_value()) {
        throw ConfigError("config sets both manifest paths and a benchmark section; pick one");
    }
    if (!benchmark.has_value()) {
        if (!train_manifest.has_value() || !test_manifest.has_value()) {
            throw ConfigError(
                "config needs a dataset source: either train_manifest + test_manifest or a "
                "benchmark section");
        }
    }
    if (image_side < 8) throw ConfigError("image_side must be at least 8");
    if (!(threshold > 0.0 && threshold < 1.0)) {
        throw ConfigError("threshold must lie strictly between 0 and 1");
    }
    if (explain_count < 0) throw ConfigError("explain_count must be >= 0");
    if (benchmark) benchmark->validate();
    if (mode == PipelineMode::melanet) {
        generator.validate();
        discriminator.validate();
        translation.validate();
        if (translation.epochs <= 0) {
            throw ConfigError("translation.epochs must be positive in melanet mode");
        }
    }
    classifier.validate();
    focal.validate();
    classifier_train.validate();
    if (classifier_train.max_epochs <= 0) {
        throw ConfigError("classifier_train.max_epochs must be positive");
    }
    if (mode == PipelineMode::baseline_augment) augmentation.validate();
}

namespace {

json augmentation_to_json(const AugmentationSpec& spec) {
    json j;
    json enabled = json::array();
    for (Transform t : spec.enabled) enabled.push_back(transform_name(t));
    j["enabled"] = enabled;
    json mags = json::object();
    for (const auto& [t, range] : spec.magnitudes) {
        mags[transform_name(t)] = json::array({range.lo, range.hi});
    }
    j["magnitudes"] = mags;
    j["factor"] = spec.factor;
    if (spec.target_total) j["target_total"] = *spec.target_total;
    return j;
}

AugmentationSpec augmentation_from_json(const json& j) {
    AugmentationSpec spec = AugmentationSpec::defaults();
    if (j.contains("enabled")) {
        spec.enabled.clear();
        for (const auto& name : j.at("enabled")) {
            spec.enabled.insert(transform_from_name(name.get<std::string>()));
        }
    }
    if (j.contains("magnitudes")) {
        spec.magnitudes.clear();
        for (const auto& [name, range] : j.at("magnitudes").items()) {
            if (!range.is_array() || range.size() != 2) {
                throw ConfigError("augmentation magnitude for '" + name +
                                  "' must be a [lo, hi] pair");
            }
            spec.magnitudes[transform_from_name(name)] = {range[0].get<double>(),
                                                          range[1].get<double>()};
        }
    }
    if (j.contains("factor")) spec.factor = j.at("factor").get<int>();
    if (j.contains("target_total")) spec.target_total = j.at("target_total").get<int64_t>();
    return spec;
}

template <typename T>
void read_if(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

json ExperimentConfig::to_json() const {
    json j;
    j["mode"] = mode_name(mode);
    j["seed"] = seed;
    j["out_dir"] = out_dir.string();
    j["image_side"] = image_side;
    j["threshold"] = threshold;
    j["explain_count"] = explain_count;

    if (benchmark) {
        const BenchmarkConfig& b = *benchmark;
        j["benchmark"] = {{"image_side", b.image_side},
                          {"n_majority", b.n_majority},
                          {"n_minority", b.n_minority},
                          {"domain_gap", b.domain_gap},
                          {"seed", b.seed}};
    } else {
        j["train_manifest"] = train_manifest ? train_manifest->string() : "";
        j["test_manifest"] = test_manifest ? test_manifest->string() : "";
    }

    j["generator"] = {{"depth", generator.depth},
                      {"base_filters", generator.base_filters},
                      {"normalization", generator.normalization}};
    j["discriminator"] = {{"receptive_field", discriminator.receptive_field},
                          {"base_filters", discriminator.base_filters},
                          {"normalization", discriminator.normalization}};
    j["translation"] = {{"lambda_cyc", translation.lambda_cyc},
                        {"learning_rate", translation.learning_rate},
                        {"batch_size", translation.batch_size},
                        {"epochs", translation.epochs},
                        {"beta1", translation.beta1},
                        {"beta2", translation.beta2},
                        {"loss_form", gan::loss_form_name(translation.loss_form)},
                        {"checkpoint_interval", translation.checkpoint_interval}};
    j["classifier"] = {{"backbone", classifier.backbone},
                       {"pretrained_weights", classifier.pretrained_weights}};
    j["focal"] = {{"alpha", focal.alpha}, {"gamma", focal.gamma}};
    j["classifier_train"] = {{"learning_rate", classifier_train.learning_rate},
                             {"batch_size", classifier_train.batch_size},
                             {"plateau_factor", classifier_train.plateau_factor},
                             {"plateau_patience", classifier_train.plateau_patience},
                             {"early_stop_patience", classifier_train.early_stop_patience},
                             {"max_epochs", classifier_train.max_epochs},
                             {"holdout_fraction", classifier_train.holdout_fraction},
                             {"min_improvement", classifier_train.min_improvement},
                             {"adadelta_rho", classifier_train.adadelta_rho},
                             {"adadelta_eps", classifier_train.adadelta_eps}};
    if (mode == PipelineMode::baseline_augment) {
        j["augmentation"] = augmentation_to_json(augmentation);
    }
    return j;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    ExperimentConfig cfg;
    if (j.contains("mode")) cfg.mode = mode_from_name(j.at("mode").get<std::string>());
    read_if(j, "seed", cfg.seed);
    if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();
    read_if(j, "image_side", cfg.image_side);
    read_if(j, "threshold", cfg.threshold);
    read_if(j, "explain_count", cfg.explain_count);

    if (j.contains("benchmark")) {
        const json& b = j.at("benchmark");
        BenchmarkConfig bench;
        bench.image_side = cfg.image_side;
        read_if(b, "image_side", bench.image_side);
        read_if(b, "n_majority", bench.n_majority);
        read_if(b, "n_minority", bench.n_minority);
        read_if(b, "domain_gap", bench.domain_gap);
        bench.seed = cfg.seed;
        read_if(b, "seed", bench.seed);
        cfg.benchmark = bench;
    }
    if (j.contains("train_manifest")) {
        auto s = j.at("train_manifest").get<std::string>();
        if (!s.empty()) cfg.train_manifest = s;
    }
    if (j.contains("test_manifest")) {
        auto s = j.at("test_manifest").get<std::string>();
        if (!s.empty()) cfg.test_manifest = s;
    }

    if (j.contains("generator")) {
        const json& g = j.at("generator");
        read_if(g, "depth", cfg.generator.depth);
        read_if(g, "base_filters", cfg.generator.base_filters);
        read_if(g, "normalization", cfg.generator.normalization);
    }
    if (j.contains("discriminator")) {
        const json& d = j.at("discriminator");
        read_if(d, "receptive_field", cfg.discriminator.receptive_field);
        read_if(d, "base_filters", cfg.discriminator.base_filters);
        read_if(d, "normalization", cfg.discriminator.normalization);
    }
    if (j.contains("translation")) {
        const json& t = j.at("translation");
        read_if(t, "lambda_cyc", cfg.translation.lambda_cyc);
        read_if(t, "learning_rate", cfg.translation.learning_rate);
        read_if(t, "batch_size", cfg.translation.batch_size);
        read_if(t, "epochs", cfg.translation.epochs);
        read_if(t, "beta1", cfg.translation.beta1);
        read_if(t, "beta2", cfg.translation.beta2);
        if (t.contains("loss_form")) {
            cfg.translation.loss_form =
                gan::loss_form_from_name(t.at("loss_form").get<std::string>());
        }
        read_if(t, "checkpoint_interval", cfg.translation.checkpoint_interval);
    }
    if (j.contains("classifier")) {
        const json& c = j.at("classifier");
        read_if(c, "backbone", cfg.classifier.backbone);
        read_if(c, "pretrained_weights", cfg.classifier.pretrained_weights);
    }
    if (j.contains("focal")) {
        const json& f = j.at("focal");
        read_if(f, "alpha", cfg.focal.alpha);
        read_if(f, "gamma", cfg.focal.gamma);
    }
    if (j.contains("classifier_train")) {
        const json& c = j.at("classifier_train");
        read_if(c, "learning_rate", cfg.classifier_train.learning_rate);
        read_if(c, "batch_size", cfg.classifier_train.batch_size);
        read_if(c, "plateau_factor", cfg.classifier_train.plateau_factor);
        read_if(c, "plateau_patience", cfg.classifier_train.plateau_patience);
        read_if(c, "early_stop_patience", cfg.classifier_train.early_stop_patience);
        read_if(c, "max_epochs", cfg.classifier_train.max_epochs);
        read_if(c, "holdout_fraction", cfg.classifier_train.holdout_fraction);
        read_if(c, "min_improvement", cfg.classifier_train.min_improvement);
        read_if(c, "adadelta_rho", cfg.classifier_train.adadelta_rho);
        read_if(c, "adadelta_eps", cfg.classifier_train.adadelta_eps);
    }
    if (j.contains("augmentation")) {
        cfg.augmentation = augmentation_from_json(j.at("augmentation"));
    }

    // training streams are derived from the master seed unless pinned
    cfg.translation.seed = derive_seed(cfg.seed, "stage:train_translator");
    cfg.classifier_train.seed = derive_seed(cfg.seed, "stage:train_classifier");
    cfg.augmentation.seed = derive_seed(cfg.seed, "stage:augment");
    return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path,
                                        const CliOverrides& overrides) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
    }
    if (overrides.mode) j["mode"] = *overrides.mode;
    if (overrides.seed) j["seed"] = *overrides.seed;
    if (overrides.out_dir) j["out_dir"] = *overrides.out_dir;
    ExperimentConfig cfg;
    try {
        cfg = from_json(j);
    } catch (const json::exception& e) {
        throw ConfigError("config file " + path.string() + ": " + e.what());
    }
    cfg.validate();
    return cfg;
}

std::string ExperimentConfig::fingerprint() const {
    json j = to_json();
    j.erase("out_dir");  // where the artifacts land is not part of the experiment identity
    std::string canonical = j.dump();
    uint64_t h = fnv1a64(canonical);
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << h;
    return out.str();
}

uint64_t ExperimentConfig::stage_seed(const std::string& stage) const {
    return derive_seed(seed, "stage:" + stage);
}

}  // namespace melanet::pipeline
