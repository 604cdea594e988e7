#include "melanet/pipeline/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "melanet/augment.hpp"
#include "melanet/clf/trainer.hpp"
#include "melanet/errors.hpp"
#include "melanet/gan/trainer.hpp"
#include "melanet/image_io.hpp"
#include "melanet/rng.hpp"
#include "melanet/xai/gradcam.hpp"

namespace melanet::pipeline {

using nlohmann::json;

namespace {

constexpr const char* kPipelineVersion = "0.1.0";
constexpr int kRecordFormat = 1;

std::string rel(const ExperimentPaths& paths, const std::filesystem::path& p) {
    return std::filesystem::relative(p, paths.root).generic_string();
}

void require_artifact(const std::filesystem::path& p, const std::string& what) {
    if (!std::filesystem::exists(p)) {
        throw DataError("missing " + what + ": " + p.string() +
                        " (run the producing stage first)");
    }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << text;
}

void ensure_layout(const ExperimentPaths& paths, const ExperimentConfig& config) {
    std::filesystem::create_directories(paths.root);
    std::filesystem::create_directories(paths.checkpoints());
    std::filesystem::create_directories(paths.logs());
    std::filesystem::create_directories(paths.report());
    if (!std::filesystem::exists(paths.config_snapshot())) {
        write_text(paths.config_snapshot(), config.to_json().dump(2) + "\n");
    }
}

json load_or_init_record(const ExperimentPaths& paths, const ExperimentConfig& config) {
    if (std::filesystem::exists(paths.record())) {
        std::ifstream in(paths.record());
        json rec;
        in >> rec;
        return rec;
    }
    json rec;
    rec["config"] = config.to_json();
    rec["fingerprint"] = config.fingerprint();
    rec["versions"] = {{"pipeline", kPipelineVersion}, {"record_format", kRecordFormat}};
    json seeds;
    seeds["master"] = config.seed;
    for (const char* s : {"prepare", "train_translator", "synthesize", "train_classifier",
                          "evaluate", "explain"}) {
        seeds[s] = config.stage_seed(s);
    }
    seeds["balance"] = derive_seed(config.seed, "balance");
    seeds["shuffle"] = derive_seed(config.seed, "shuffle");
    rec["seeds"] = seeds;
    rec["status"] = "partial";
    rec["stages"] = json::object();
    return rec;
}

void write_record(const ExperimentPaths& paths, const json& rec, bool verify_artifacts) {
    if (verify_artifacts && rec.contains("stages")) {
        for (const auto& [stage, entry] : rec.at("stages").items()) {
            if (!entry.contains("artifacts")) continue;
            for (const auto& a : entry.at("artifacts")) {
                auto p = paths.root / a.get<std::string>();
                if (!std::filesystem::exists(p)) {
                    throw DataError("record lists missing artifact for stage " + stage + ": " +
                                    p.string());
                }
            }
        }
    }
    write_text(paths.record(), rec.dump(2) + "\n");
}

json counts_json(const ClassCounts& c) {
    return {{"benign", c.benign}, {"malignant", c.malignant}, {"total", c.total()}};
}

ImageTensor load_resized(const ImageTensor& image, int side) {
    if (image.height == side && image.width == side) return image;
    return pad_and_resize(image, side);
}

LabelledDataset standardized_copy(const LabelledDataset& dataset) {
    LabelledDataset out = dataset;
    for (auto& s : out.samples) s.image = standardize(s.image);
    return out;
}

// prepare: resolve the dataset source, square and resize every image, and
// freeze both splits as snapshot directories.
json stage_prepare(const ExperimentConfig& config, const ExperimentPaths& paths) {
    LabelledDataset train, test;
    if (config.benchmark) {
        BenchmarkSplit split = generate_benchmark(*config.benchmark);
        train = std::move(split.train);
        test = std::move(split.test);
    } else {
        train = load_manifest(*config.train_manifest, config.train_manifest->parent_path());
        test = load_manifest(*config.test_manifest, config.test_manifest->parent_path());
    }
    for (auto& s : train.samples) s.image = load_resized(s.image, config.image_side);
    for (auto& s : test.samples) s.image = load_resized(s.image, config.image_side);

    json meta = {{"stage", "prepare"},
                 {"image_side", config.image_side},
                 {"fingerprint", config.fingerprint()}};
    meta["split"] = "train";
    meta["counts"] = counts_json(train.class_counts());
    write_snapshot(train, paths.train_data(), meta);
    meta["split"] = "test";
    meta["counts"] = counts_json(test.class_counts());
    write_snapshot(test, paths.test_data(), meta);

    json entry;
    entry["artifacts"] = {rel(paths, paths.train_data() / "manifest.csv"),
                          rel(paths, paths.test_data() / "manifest.csv")};
    entry["train_counts"] = counts_json(train.class_counts());
    entry["test_counts"] = counts_json(test.class_counts());
    return entry;
}

LabelledDataset tanh_copy(const LabelledDataset& dataset) {
    LabelledDataset out = dataset;
    for (auto& s : out.samples) s.image = to_tanh_range(standardize(s.image));
    return out;
}

json stage_train_translator(const ExperimentConfig& config, const ExperimentPaths& paths) {
    require_artifact(paths.train_data() / "manifest.csv", "training snapshot");
    LabelledDataset train = read_snapshot(paths.train_data());
    LabelledDataset balanced = undersample_balance(train, derive_seed(config.seed, "balance"));
    LabelledDataset benign = tanh_copy(balanced.filter_label(ClassLabel::benign));
    LabelledDataset malignant = tanh_copy(balanced.filter_label(ClassLabel::malignant));

    gan::CycleGan::CheckpointHook hook;
    if (config.translation.checkpoint_interval > 0) {
        hook = [&paths](int epoch, gan::CycleGan& model) {
            char name[64];
            std::snprintf(name, sizeof(name), "translator_epoch_%04d.ckpt", epoch);
            model.save(paths.checkpoints() / name);
        };
    }
    gan::CycleGan model = gan::train_cyclegan(benign, malignant, config.generator,
                                              config.discriminator, config.translation, hook);
    model.save(paths.translator_checkpoint());
    auto losses_csv = paths.logs() / "translator_losses.csv";
    gan::write_loss_history_csv(model.history(), losses_csv);

    json entry;
    entry["artifacts"] = {rel(paths, paths.translator_checkpoint()), rel(paths, losses_csv)};
    entry["balanced_counts"] = counts_json(balanced.class_counts());
    entry["epochs"] = model.epoch();
    if (!model.history().empty()) {
        entry["final_losses"] = {{"adv_bm", model.history().back().adv_bm},
                                 {"adv_mb", model.history().back().adv_mb},
                                 {"cycle", model.history().back().cycle},
                                 {"total", model.history().back().total}};
    }
    return entry;
}

// synthesize: every benign training original through the benign-to-malignant
// generator, one synthetic malignant each.
json stage_synthesize(const ExperimentConfig& config, const ExperimentPaths& paths) {
    require_artifact(paths.train_data() / "manifest.csv", "training snapshot");
    require_artifact(paths.translator_checkpoint(), "translator checkpoint");
    LabelledDataset train = read_snapshot(paths.train_data());
    gan::CycleGan model = gan::CycleGan::load(paths.translator_checkpoint());

    std::vector<const LabelledSample*> benign = train.of_label(ClassLabel::benign);
    std::vector<ImageTensor> inputs;
    inputs.reserve(benign.size());
    for (const auto* s : benign) inputs.push_back(to_tanh_range(standardize(s->image)));
    std::vector<ImageTensor> translated = model.translate(inputs, gan::Direction::B_to_M);

    LabelledDataset synth;
    synth.samples.reserve(translated.size());
    for (size_t i = 0; i < translated.size(); ++i) {
        LabelledSample s;
        s.id = benign[i]->id + "_syn";
        s.label = ClassLabel::malignant;
        s.provenance = Provenance::synthetic;
        s.source_id = benign[i]->id;
        s.image = quantize_to_raw(from_tanh_range(translated[i]));
        synth.samples.push_back(std::move(s));
    }
    synth.require_unique_ids();
    json meta = {{"stage", "synthesize"},
                 {"count", synth.size()},
                 {"direction", "benign_to_malignant"},
                 {"fingerprint", config.fingerprint()}};
    write_snapshot(synth, paths.synthetic(), meta);

    json entry;
    entry["artifacts"] = {rel(paths, paths.synthetic() / "manifest.csv")};
    entry["synthetic_count"] = synth.size();
    return entry;
}

json stage_train_classifier(const ExperimentConfig& config, const ExperimentPaths& paths) {
    require_artifact(paths.train_data() / "manifest.csv", "training snapshot");
    LabelledDataset train = read_snapshot(paths.train_data());

    LabelledDataset effective;
    switch (config.mode) {
        case PipelineMode::melanet: {
            require_artifact(paths.synthetic() / "manifest.csv", "synthetic snapshot");
            LabelledDataset synth = read_snapshot(paths.synthetic());
            effective = merge_and_shuffle(train, synth, derive_seed(config.seed, "shuffle"));
            break;
        }
        case PipelineMode::baseline_plain:
            effective = train;
            break;
        case PipelineMode::baseline_augment:
            effective = augment_offline(train, config.augmentation);
            break;
    }

    clf::Classifier model(config.classifier, config.image_side,
                          config.stage_seed("train_classifier"));
    LabelledDataset prepared = standardized_copy(effective);
    clf::TrainSummary summary =
        clf::train_classifier(model, prepared, config.focal, config.classifier_train);
    model.save(paths.classifier_checkpoint());
    auto log_csv = paths.logs() / "classifier_train.csv";
    clf::write_train_log_csv(summary.history, log_csv);

    json entry;
    entry["artifacts"] = {rel(paths, paths.classifier_checkpoint()), rel(paths, log_csv)};
    entry["train_counts"] = counts_json(effective.class_counts());
    entry["best_epoch"] = summary.best_epoch;
    entry["best_loss"] = summary.best_loss;
    entry["early_stopped"] = summary.early_stopped;
    entry["monitor"] = summary.monitor;
    entry["epochs_run"] = summary.history.size();
    return entry;
}

json stage_evaluate(const ExperimentConfig& config, const ExperimentPaths& paths) {
    require_artifact(paths.test_data() / "manifest.csv", "test snapshot");
    require_artifact(paths.classifier_checkpoint(), "classifier checkpoint");
    LabelledDataset test = read_snapshot(paths.test_data());
    clf::Classifier model = clf::Classifier::load(paths.classifier_checkpoint());

    std::vector<ImageTensor> images;
    images.reserve(test.samples.size());
    for (const auto& s : test.samples) images.push_back(standardize(s.image));
    auto probas = model.predict_proba(images);

    std::vector<metrics::PerSampleScore> scored;
    scored.reserve(probas.size());
    for (size_t i = 0; i < probas.size(); ++i) {
        scored.push_back({test.samples[i].id, probas[i][1],
                          static_cast<int>(test.samples[i].label)});
    }
    metrics::EvalReport report =
        metrics::evaluate(scored, config.threshold, config.fingerprint());
    report.write(paths.report());

    json entry;
    entry["artifacts"] = {rel(paths, paths.report() / "eval_report.json"),
                          rel(paths, paths.report() / "roc.csv")};
    entry["auc"] = report.auc;
    entry["sensitivity"] = report.sensitivity;
    entry["counts"] = {{"tp", report.counts.tp},
                       {"fp", report.counts.fp},
                       {"tn", report.counts.tn},
                       {"fn", report.counts.fn}};
    return entry;
}

json stage_explain(const ExperimentConfig& config, const ExperimentPaths& paths) {
    require_artifact(paths.test_data() / "manifest.csv", "test snapshot");
    require_artifact(paths.classifier_checkpoint(), "classifier checkpoint");
    LabelledDataset test = read_snapshot(paths.test_data());
    clf::Classifier model = clf::Classifier::load(paths.classifier_checkpoint());
    std::filesystem::create_directories(paths.saliency());

    json entry;
    json artifacts = json::array();

    int count = std::min<int>(config.explain_count, static_cast<int>(test.samples.size()));
    for (int i = 0; i < count; ++i) {
        const LabelledSample& s = test.samples[static_cast<size_t>(i)];
        ImageTensor std_img = standardize(s.image);
        auto proba = model.predict_proba({std_img});
        int cls = proba[0][1] >= config.threshold ? 1 : 0;
        xai::SaliencyMap map = xai::grad_cam(model, std_img, cls, s.id);
        auto png = paths.saliency() / (s.id + "_cam.png");
        auto overlay = paths.saliency() / (s.id + "_overlay.png");
        auto csv = paths.saliency() / (s.id + "_cam.csv");
        xai::write_saliency_png(map, png);
        xai::write_saliency_overlay_png(map, std_img, overlay);
        xai::write_saliency_csv(map, csv);
        artifacts.push_back(rel(paths, png));
        artifacts.push_back(rel(paths, overlay));
        artifacts.push_back(rel(paths, csv));
    }

    LabelledDataset prepared = standardized_copy(test);
    xai::FeatureMatrix features = xai::export_features(model, prepared);
    auto features_csv = paths.report() / "features.csv";
    xai::write_feature_csv(features, features_csv);
    artifacts.push_back(rel(paths, features_csv));

    entry["artifacts"] = artifacts;
    entry["saliency_count"] = count;
    entry["feature_dim"] = features.rows.empty() ? 0 : features.rows.front().size();
    return entry;
}

json dispatch(const ExperimentConfig& config, Stage stage, const ExperimentPaths& paths) {
    switch (stage) {
        case Stage::prepare: return stage_prepare(config, paths);
        case Stage::train_translator: return stage_train_translator(config, paths);
        case Stage::synthesize: return stage_synthesize(config, paths);
        case Stage::train_classifier: return stage_train_classifier(config, paths);
        case Stage::evaluate: return stage_evaluate(config, paths);
        case Stage::explain: return stage_explain(config, paths);
    }
    throw ConfigError("unknown stage value");
}

}  // namespace

std::string stage_name(Stage stage) {
    switch (stage) {
        case Stage::prepare: return "prepare";
        case Stage::train_translator: return "train_translator";
        case Stage::synthesize: return "synthesize";
        case Stage::train_classifier: return "train_classifier";
        case Stage::evaluate: return "evaluate";
        case Stage::explain: return "explain";
    }
    throw ConfigError("unknown stage value");
}

Stage stage_from_name(const std::string& name) {
    for (Stage s : {Stage::prepare, Stage::train_translator, Stage::synthesize,
                    Stage::train_classifier, Stage::evaluate, Stage::explain}) {
        if (stage_name(s) == name) return s;
    }
    throw ConfigError("unknown stage '" + name +
                      "' (expected prepare, train_translator, synthesize, train_classifier, "
                      "evaluate or explain)");
}

std::vector<Stage> stages_for(PipelineMode mode) {
    if (mode == PipelineMode::melanet) {
        return {Stage::prepare, Stage::train_translator, Stage::synthesize,
                Stage::train_classifier, Stage::evaluate, Stage::explain};
    }
    return {Stage::prepare, Stage::train_classifier, Stage::evaluate, Stage::explain};
}

void run_stage(const ExperimentConfig& config, Stage stage) {
    config.validate();
    if (config.mode != PipelineMode::melanet &&
        (stage == Stage::train_translator || stage == Stage::synthesize)) {
        throw ConfigError("stage " + stage_name(stage) + " is not part of mode " +
                          mode_name(config.mode));
    }
    ExperimentPaths paths{config.out_dir};
    ensure_layout(paths, config);
    json rec = load_or_init_record(paths, config);

    auto t0 = std::chrono::steady_clock::now();
    json entry;
    try {
        entry = dispatch(config, stage, paths);
    } catch (...) {
        rec["status"] = "failed";
        rec["failed_stage"] = stage_name(stage);
        write_record(paths, rec, false);
        throw;
    }
    auto t1 = std::chrono::steady_clock::now();
    entry["seconds"] = std::chrono::duration<double>(t1 - t0).count();
    rec["stages"][stage_name(stage)] = entry;
    rec.erase("failed_stage");

    bool complete = true;
    for (Stage s : stages_for(config.mode)) {
        if (!rec["stages"].contains(stage_name(s))) complete = false;
    }
    rec["status"] = complete ? "ok" : "partial";
    write_record(paths, rec, true);
}

metrics::EvalReport run_pipeline(const ExperimentConfig& config) {
    config.validate();
    for (Stage stage : stages_for(config.mode)) run_stage(config, stage);
    return metrics::EvalReport::read(ExperimentPaths{config.out_dir}.report());
}

json read_record(const std::filesystem::path& experiment_dir) {
    auto path = experiment_dir / "record.json";
    std::ifstream in(path);
    if (!in) throw DataError("missing experiment record: " + path.string());
    json rec;
    try {
        in >> rec;
    } catch (const json::exception& e) {
        throw DataError("unreadable experiment record " + path.string() + ": " + e.what());
    }
    return rec;
}

std::string report_across(const std::vector<std::filesystem::path>& experiment_dirs,
                          const std::filesystem::path& out_dir) {
    if (experiment_dirs.empty()) throw ConfigError("report needs at least one experiment dir");
    std::vector<std::pair<std::string, metrics::EvalReport>> reports;
    for (const auto& dir : experiment_dirs) {
        require_artifact(dir / "report" / "eval_report.json", "evaluation report");
        std::string name = dir.filename().string();
        if (name.empty()) name = dir.parent_path().filename().string();
        reports.emplace_back(name, metrics::EvalReport::read(dir / "report"));
    }
    auto rows = metrics::compare_report(reports);
    std::string table = metrics::render_comparison(rows);
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        metrics::write_comparison_csv(rows, out_dir / "comparison.csv");
        std::ofstream roc(out_dir / "roc_overlay.csv", std::ios::binary);
        if (!roc) throw DataError("cannot write " + (out_dir / "roc_overlay.csv").string());
        roc << "experiment,fpr,tpr,threshold\n";
        for (const auto& [name, report] : reports) {
            for (const auto& pt : report.roc.points) {
                roc << name << ',' << pt.fpr << ',' << pt.tpr << ',';
                if (std::isinf(pt.threshold)) {
                    roc << (pt.threshold > 0 ? "inf" : "-inf");
                } else {
                    roc << pt.threshold;
                }
                roc << '\n';
            }
        }
    }
    return table;
}

void generate_benchmark_dirs(const BenchmarkConfig& config,
                             const std::filesystem::path& out_dir) {
    BenchmarkSplit split = generate_benchmark(config);
    json meta = {{"source", "benchmark"},
                 {"image_side", config.image_side},
                 {"n_majority", config.n_majority},
                 {"n_minority", config.n_minority},
                 {"domain_gap", config.domain_gap},
                 {"seed", config.seed}};
    meta["split"] = "train";
    meta["counts"] = counts_json(split.train.class_counts());
    write_snapshot(split.train, out_dir / "train", meta);
    meta["split"] = "test";
    meta["counts"] = counts_json(split.test.class_counts());
    write_snapshot(split.test, out_dir / "test", meta);
}

}  // namespace melanet::pipeline
