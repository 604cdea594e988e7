#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "melanet/errors.hpp"
#include "melanet/pipeline/runner.hpp"
#include "melanet/rng.hpp"

using namespace melanet;
using namespace melanet::pipeline;
using nlohmann::json;

namespace {

std::filesystem::path temp_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "melanet_pipeline_tests" / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    REQUIRE(is);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

// benchmark-backed config small enough to train in well under a second
ExperimentConfig tiny_config(PipelineMode mode, uint64_t seed,
                             const std::filesystem::path& out_dir) {
    ExperimentConfig cfg;
    cfg.mode = mode;
    cfg.seed = seed;
    cfg.out_dir = out_dir;
    cfg.image_side = 16;
    cfg.explain_count = 2;
    BenchmarkConfig bench;
    bench.image_side = 16;
    bench.n_majority = 10;
    bench.n_minority = 5;
    bench.domain_gap = 0.5;
    bench.seed = seed;
    cfg.benchmark = bench;

    cfg.generator.depth = 1;
    cfg.generator.base_filters = 2;
    cfg.discriminator.receptive_field = 16;
    cfg.discriminator.base_filters = 2;
    cfg.translation.epochs = 1;
    cfg.translation.checkpoint_interval = 0;
    cfg.translation.seed = derive_seed(seed, "stage:train_translator");

    cfg.classifier_train.learning_rate = 1.0;
    cfg.classifier_train.batch_size = 4;
    cfg.classifier_train.max_epochs = 2;
    cfg.classifier_train.seed = derive_seed(seed, "stage:train_classifier");
    cfg.augmentation.seed = derive_seed(seed, "stage:augment");
    return cfg;
}

}  // namespace

TEST_CASE("pipeline mode names roundtrip") {
    for (PipelineMode m :
         {PipelineMode::melanet, PipelineMode::baseline_plain, PipelineMode::baseline_augment}) {
        CHECK(mode_from_name(mode_name(m)) == m);
    }
    CHECK_THROWS_WITH_AS(mode_from_name("vanilla"), doctest::Contains("vanilla"), ConfigError);
}

TEST_CASE("stage names roundtrip and baselines skip the translation stages") {
    std::vector<Stage> all = {Stage::prepare,          Stage::train_translator,
                              Stage::synthesize,       Stage::train_classifier,
                              Stage::evaluate,         Stage::explain};
    for (Stage s : all) CHECK(stage_from_name(stage_name(s)) == s);
    CHECK_THROWS_WITH_AS(stage_from_name("deploy"), doctest::Contains("unknown stage"),
                         ConfigError);

    CHECK(stages_for(PipelineMode::melanet) == all);
    std::vector<Stage> lean = {Stage::prepare, Stage::train_classifier, Stage::evaluate,
                               Stage::explain};
    CHECK(stages_for(PipelineMode::baseline_plain) == lean);
    CHECK(stages_for(PipelineMode::baseline_augment) == lean);
}

TEST_CASE("config defaults come with derived stage seeds") {
    ExperimentConfig cfg = ExperimentConfig::from_json(json::object());
    CHECK(cfg.mode == PipelineMode::melanet);
    CHECK(cfg.seed == 0);
    CHECK(cfg.image_side == 64);
    CHECK(cfg.threshold == 0.5);
    CHECK(cfg.explain_count == 4);
    CHECK(cfg.translation.seed == derive_seed(0, "stage:train_translator"));
    CHECK(cfg.classifier_train.seed == derive_seed(0, "stage:train_classifier"));
    CHECK(cfg.augmentation.seed == derive_seed(0, "stage:augment"));
    CHECK(cfg.stage_seed("evaluate") == derive_seed(0, "stage:evaluate"));
    CHECK(cfg.stage_seed("evaluate") != cfg.stage_seed("prepare"));
}

TEST_CASE("config json roundtrip preserves every field") {
    ExperimentConfig cfg = tiny_config(PipelineMode::baseline_augment, 42, "exp_dir");
    cfg.threshold = 0.35;
    cfg.focal.alpha = 0.4;
    cfg.focal.gamma = 3.0;
    cfg.translation.lambda_cyc = 7.5;
    cfg.translation.loss_form = gan::GanLossForm::least_squares;
    cfg.classifier_train.holdout_fraction = 0.2;
    cfg.augmentation.factor = 3;
    cfg.augmentation.target_total = 40;

    json j = cfg.to_json();
    ExperimentConfig back = ExperimentConfig::from_json(j);
    CHECK(back.to_json().dump() == j.dump());
    CHECK(back.fingerprint() == cfg.fingerprint());
    CHECK(back.mode == PipelineMode::baseline_augment);
    CHECK(back.translation.loss_form == gan::GanLossForm::least_squares);
    CHECK(back.augmentation.target_total.has_value());
    CHECK(*back.augmentation.target_total == 40);
}

TEST_CASE("config validation pins down the dataset source and ranges") {
    ExperimentConfig cfg = tiny_config(PipelineMode::baseline_plain, 1, "d");
    CHECK_NOTHROW(cfg.validate());

    ExperimentConfig both = cfg;
    both.train_manifest = "train.csv";
    both.test_manifest = "test.csv";
    CHECK_THROWS_WITH_AS(both.validate(), doctest::Contains("pick one"), ConfigError);

    ExperimentConfig none = cfg;
    none.benchmark.reset();
    CHECK_THROWS_WITH_AS(none.validate(), doctest::Contains("dataset source"), ConfigError);

    ExperimentConfig half = none;
    half.train_manifest = "train.csv";
    CHECK_THROWS_AS(half.validate(), ConfigError);

    ExperimentConfig bad = cfg;
    bad.threshold = 1.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.threshold = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.explain_count = -1;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.image_side = 7;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.classifier_train.max_epochs = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("translation and augmentation are only validated for modes that use them") {
    ExperimentConfig cfg = tiny_config(PipelineMode::baseline_plain, 1, "d");
    cfg.translation.epochs = 0;  // fine: baselines never train a translator
    CHECK_NOTHROW(cfg.validate());

    ExperimentConfig mel = tiny_config(PipelineMode::melanet, 1, "d");
    mel.translation.epochs = 0;
    CHECK_THROWS_WITH_AS(mel.validate(), doctest::Contains("translation.epochs"), ConfigError);

    ExperimentConfig aug = tiny_config(PipelineMode::baseline_augment, 1, "d");
    aug.augmentation.factor = 0;
    CHECK_THROWS_AS(aug.validate(), ConfigError);
    aug.mode = PipelineMode::baseline_plain;  // unused section is ignored
    CHECK_NOTHROW(aug.validate());
}

TEST_CASE("loading a config file applies cli overrides before derivation") {
    auto dir = temp_dir("config_load");
    auto path = dir / "experiment.json";
    json j = {{"mode", "melanet"},
              {"seed", 1},
              {"image_side", 16},
              {"benchmark", {{"n_majority", 10}, {"n_minority", 5}}},
              {"classifier_train", {{"max_epochs", 2}}},
              {"translation", {{"epochs", 1}}}};
    std::ofstream(path) << j.dump();

    CliOverrides ov;
    ov.mode = "baseline_plain";
    ov.seed = 9;
    ov.out_dir = (dir / "out").string();
    ExperimentConfig cfg = ExperimentConfig::load(path, ov);
    CHECK(cfg.mode == PipelineMode::baseline_plain);
    CHECK(cfg.seed == 9);
    CHECK(cfg.out_dir == dir / "out");
    CHECK(cfg.translation.seed == derive_seed(9, "stage:train_translator"));
    CHECK(cfg.benchmark->seed == 9);  // benchmark seed follows the master unless pinned

    CHECK_THROWS_WITH_AS(ExperimentConfig::load(dir / "absent.json"),
                         doctest::Contains("cannot open"), ConfigError);
    auto broken = dir / "broken.json";
    std::ofstream(broken) << "{not json";
    CHECK_THROWS_WITH_AS(ExperimentConfig::load(broken), doctest::Contains("not valid JSON"),
                         ConfigError);
}

TEST_CASE("benchmark section inherits image side and seed from the experiment") {
    json j = {{"seed", 77},
              {"image_side", 32},
              {"benchmark", {{"n_majority", 8}, {"n_minority", 4}}}};
    ExperimentConfig cfg = ExperimentConfig::from_json(j);
    REQUIRE(cfg.benchmark.has_value());
    CHECK(cfg.benchmark->image_side == 32);
    CHECK(cfg.benchmark->seed == 77);

    json pinned = j;
    pinned["benchmark"]["image_side"] = 16;
    pinned["benchmark"]["seed"] = 5;
    ExperimentConfig cfg2 = ExperimentConfig::from_json(pinned);
    CHECK(cfg2.benchmark->image_side == 16);
    CHECK(cfg2.benchmark->seed == 5);
}

TEST_CASE("fingerprint ignores the output directory but tracks settings") {
    ExperimentConfig a = tiny_config(PipelineMode::baseline_plain, 3, "dir_a");
    ExperimentConfig b = tiny_config(PipelineMode::baseline_plain, 3, "dir_b");
    CHECK(a.fingerprint() == b.fingerprint());
    CHECK(a.fingerprint().size() == 16);

    ExperimentConfig seeded = tiny_config(PipelineMode::baseline_plain, 4, "dir_a");
    CHECK(seeded.fingerprint() != a.fingerprint());

    ExperimentConfig gamma = a;
    gamma.focal.gamma = 5.0;
    CHECK(gamma.fingerprint() != a.fingerprint());

    ExperimentConfig mode = tiny_config(PipelineMode::melanet, 3, "dir_a");
    CHECK(mode.fingerprint() != a.fingerprint());
}

TEST_CASE("baseline pipeline lays out the full artifact tree") {
    auto dir = temp_dir("baseline_run");
    ExperimentConfig cfg = tiny_config(PipelineMode::baseline_plain, 5, dir);
    metrics::EvalReport report = run_pipeline(cfg);

    CHECK(report.config_fingerprint == cfg.fingerprint());
    CHECK(report.counts.tp + report.counts.fp + report.counts.tn + report.counts.fn == 4);
    CHECK(report.per_sample_scores.size() == 4);
    CHECK(report.auc >= 0.0);
    CHECK(report.auc <= 1.0);

    ExperimentPaths paths{dir};
    for (const auto& p :
         {paths.config_snapshot(), paths.record(), paths.train_data() / "manifest.csv",
          paths.test_data() / "manifest.csv", paths.classifier_checkpoint(),
          paths.logs() / "classifier_train.csv", paths.report() / "eval_report.json",
          paths.report() / "roc.csv", paths.report() / "features.csv"}) {
        CAPTURE(p.string());
        CHECK(std::filesystem::exists(p));
    }
    CHECK_FALSE(std::filesystem::exists(paths.translator_checkpoint()));
    CHECK_FALSE(std::filesystem::exists(paths.synthetic()));
    int saliency_pngs = 0;
    for (const auto& e : std::filesystem::directory_iterator(paths.saliency())) {
        if (e.path().extension() == ".png") ++saliency_pngs;
    }
    CHECK(saliency_pngs == 2 * cfg.explain_count);  // heat map + overlay each

    json rec = read_record(dir);
    CHECK(rec["status"] == "ok");
    CHECK(rec["fingerprint"] == cfg.fingerprint());
    CHECK(rec["config"]["mode"] == "baseline_plain");
    CHECK(rec["stages"].contains("prepare"));
    CHECK(rec["stages"].contains("train_classifier"));
    CHECK(rec["stages"].contains("evaluate"));
    CHECK(rec["stages"].contains("explain"));
    CHECK_FALSE(rec["stages"].contains("train_translator"));
    CHECK(rec["seeds"]["master"] == 5);
    CHECK(rec["seeds"]["evaluate"] == cfg.stage_seed("evaluate"));
    CHECK(rec["seeds"]["balance"] == derive_seed(5, "balance"));
    // benchmark 10+5 splits 70/30 per class
    CHECK(rec["stages"]["prepare"]["train_counts"]["benign"] == 7);
    CHECK(rec["stages"]["prepare"]["train_counts"]["malignant"] == 4);
    CHECK(rec["stages"]["prepare"]["test_counts"]["total"] == 4);
    CHECK(rec["stages"]["evaluate"].contains("auc"));
    CHECK(rec["stages"]["train_classifier"]["epochs_run"] == 2);
    for (const auto& [name, entry] : rec["stages"].items()) {
        CAPTURE(name);
        CHECK(entry.contains("seconds"));
        CHECK(entry.contains("artifacts"));
    }
}

TEST_CASE("melanet pipeline synthesizes one malignant sample per benign original") {
    auto dir = temp_dir("melanet_run");
    ExperimentConfig cfg = tiny_config(PipelineMode::melanet, 6, dir);
    cfg.benchmark->n_majority = 8;
    cfg.benchmark->n_minority = 4;
    metrics::EvalReport report = run_pipeline(cfg);
    CHECK(report.per_sample_scores.size() == 3);  // 2 benign + 1 malignant test samples

    ExperimentPaths paths{dir};
    CHECK(std::filesystem::exists(paths.translator_checkpoint()));
    CHECK(std::filesystem::exists(paths.logs() / "translator_losses.csv"));

    LabelledDataset synth = read_snapshot(paths.synthetic());
    CHECK(synth.size() == 6);  // 70% of 8 benign originals
    for (const auto& s : synth.samples) {
        CHECK(s.label == ClassLabel::malignant);
        CHECK(s.provenance == Provenance::synthetic);
        CHECK(s.id == s.source_id + "_syn");
        CHECK(s.image.height == 16);
    }

    json rec = read_record(dir);
    CHECK(rec["status"] == "ok");
    CHECK(rec["stages"]["train_translator"]["epochs"] == 1);
    CHECK(rec["stages"]["train_translator"]["balanced_counts"]["benign"] == 3);
    CHECK(rec["stages"]["train_translator"]["balanced_counts"]["malignant"] == 3);
    CHECK(rec["stages"]["train_translator"]["final_losses"].contains("cycle"));
    CHECK(rec["stages"]["synthesize"]["synthetic_count"] == 6);
    // classifier sees originals plus synthetics
    CHECK(rec["stages"]["train_classifier"]["train_counts"]["benign"] == 6);
    CHECK(rec["stages"]["train_classifier"]["train_counts"]["malignant"] == 3 + 6);
}

TEST_CASE("running stages one by one matches the one-shot pipeline byte for byte") {
    auto one_shot = temp_dir("compose_oneshot");
    ExperimentConfig cfg1 = tiny_config(PipelineMode::baseline_plain, 7, one_shot);
    run_pipeline(cfg1);

    auto stepwise = temp_dir("compose_stepwise");
    ExperimentConfig cfg2 = tiny_config(PipelineMode::baseline_plain, 7, stepwise);
    for (Stage s : stages_for(cfg2.mode)) run_stage(cfg2, s);

    CHECK(slurp(one_shot / "report" / "eval_report.json") ==
          slurp(stepwise / "report" / "eval_report.json"));
    CHECK(slurp(one_shot / "report" / "roc.csv") == slurp(stepwise / "report" / "roc.csv"));
    CHECK(read_record(one_shot)["fingerprint"] == read_record(stepwise)["fingerprint"]);
}

TEST_CASE("pipeline results are reproducible from the seed") {
    auto dir_a = temp_dir("repro_a");
    run_pipeline(tiny_config(PipelineMode::baseline_plain, 11, dir_a));
    auto dir_b = temp_dir("repro_b");
    run_pipeline(tiny_config(PipelineMode::baseline_plain, 11, dir_b));
    CHECK(slurp(dir_a / "report" / "eval_report.json") ==
          slurp(dir_b / "report" / "eval_report.json"));

    auto dir_c = temp_dir("repro_c");
    run_pipeline(tiny_config(PipelineMode::baseline_plain, 12, dir_c));
    CHECK(read_record(dir_c)["fingerprint"] != read_record(dir_a)["fingerprint"]);
}

TEST_CASE("stages demand their upstream artifacts and record failures") {
    auto dir = temp_dir("missing_artifacts");
    ExperimentConfig cfg = tiny_config(PipelineMode::melanet, 8, dir);

    CHECK_THROWS_WITH_AS(run_stage(cfg, Stage::evaluate),
                         doctest::Contains("run the producing stage first"), DataError);
    json rec = read_record(dir);
    CHECK(rec["status"] == "failed");
    CHECK(rec["failed_stage"] == "evaluate");

    run_stage(cfg, Stage::prepare);
    CHECK_THROWS_WITH_AS(run_stage(cfg, Stage::synthesize),
                         doctest::Contains("translator checkpoint"), DataError);
    CHECK_THROWS_WITH_AS(run_stage(cfg, Stage::evaluate),
                         doctest::Contains("classifier checkpoint"), DataError);
    rec = read_record(dir);
    CHECK(rec["status"] == "failed");
    CHECK(rec["stages"].contains("prepare"));

    ExperimentConfig plain = tiny_config(PipelineMode::baseline_plain, 8, dir);
    CHECK_THROWS_WITH_AS(run_stage(plain, Stage::train_translator),
                         doctest::Contains("not part of mode"), ConfigError);
}

TEST_CASE("read_record reports missing or corrupt records") {
    auto dir = temp_dir("record_errors");
    CHECK_THROWS_WITH_AS(read_record(dir / "nowhere"), doctest::Contains("missing"), DataError);
    std::filesystem::create_directories(dir / "bad");
    std::ofstream(dir / "bad" / "record.json") << "}{";
    CHECK_THROWS_WITH_AS(read_record(dir / "bad"), doctest::Contains("unreadable"), DataError);
}

TEST_CASE("report_across renders experiments beside the published rows") {
    auto dir_a = temp_dir("across_a");
    run_pipeline(tiny_config(PipelineMode::baseline_plain, 21, dir_a));
    auto dir_b = temp_dir("across_b");
    run_pipeline(tiny_config(PipelineMode::baseline_plain, 22, dir_b));

    auto out = temp_dir("across_out");
    std::string table = report_across({dir_a, dir_b}, out);
    CHECK(table.find("across_a") != std::string::npos);
    CHECK(table.find("across_b") != std::string::npos);
    CHECK(table.find("MelaNet") != std::string::npos);
    CHECK(table.find("Gutman") != std::string::npos);

    std::ifstream cmp(out / "comparison.csv");
    int lines = 0;
    std::string line;
    while (std::getline(cmp, line)) ++lines;
    CHECK(lines == 1 + 7 + 2);  // header, published rows, experiments

    std::string overlay = slurp(out / "roc_overlay.csv");
    CHECK(overlay.rfind("experiment,fpr,tpr,threshold\n", 0) == 0);
    CHECK(overlay.find("across_a,0,0,inf\n") != std::string::npos);

    CHECK_THROWS_AS(report_across({}), ConfigError);
    CHECK_THROWS_WITH_AS(report_across({dir_a / "nope"}), doctest::Contains("evaluation report"),
                         DataError);
}

TEST_CASE("benchmark generation writes loadable train and test snapshots") {
    auto dir = temp_dir("bench_dirs");
    BenchmarkConfig bench;
    bench.image_side = 16;
    bench.n_majority = 10;
    bench.n_minority = 5;
    bench.domain_gap = 0.5;
    bench.seed = 3;
    generate_benchmark_dirs(bench, dir);

    LabelledDataset train = read_snapshot(dir / "train");
    LabelledDataset test = read_snapshot(dir / "test");
    CHECK(train.class_counts().benign == 7);
    CHECK(train.class_counts().malignant == 4);
    CHECK(test.class_counts().benign == 3);
    CHECK(test.class_counts().malignant == 1);
    for (const auto& s : train.samples) {
        CHECK(s.image.height == 16);
        CHECK(s.image.width == 16);
    }
    json meta = read_snapshot_metadata(dir / "train");
    CHECK(meta["source"] == "benchmark");
    CHECK(meta["domain_gap"] == 0.5);
}

TEST_CASE("baseline_augment multiplies the training set before classification") {
    auto dir = temp_dir("augment_run");
    ExperimentConfig cfg = tiny_config(PipelineMode::baseline_augment, 9, dir);
    cfg.augmentation.factor = 2;
    run_pipeline(cfg);

    json rec = read_record(dir);
    CHECK(rec["status"] == "ok");
    CHECK_FALSE(rec["stages"].contains("synthesize"));
    // originals kept, one augmented copy each
    CHECK(rec["stages"]["train_classifier"]["train_counts"]["benign"] == 14);
    CHECK(rec["stages"]["train_classifier"]["train_counts"]["malignant"] == 8);
}

TEST_CASE("config snapshot in the experiment dir reloads to the same fingerprint") {
    auto dir = temp_dir("snapshot_check");
    ExperimentConfig cfg = tiny_config(PipelineMode::baseline_plain, 13, dir);
    run_pipeline(cfg);
    ExperimentConfig back = ExperimentConfig::load(ExperimentPaths{dir}.config_snapshot());
    CHECK(back.fingerprint() == cfg.fingerprint());
}
