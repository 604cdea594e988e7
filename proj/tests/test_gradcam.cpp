#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "melanet/clf/model.hpp"
#include "melanet/errors.hpp"
#include "melanet/image_io.hpp"
#include "melanet/rng.hpp"
#include "melanet/xai/gradcam.hpp"

using namespace melanet;
using namespace melanet::xai;

namespace {

std::filesystem::path temp_path(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "melanet_xai_tests";
    std::filesystem::create_directories(dir);
    return dir / name;
}

ImageTensor noisy_image(int side, float level, uint64_t seed) {
    ImageTensor img(side, side, 3, RangeTag::standardized_0_1);
    Rng rng(seed);
    for (auto& v : img.values)
        v = std::clamp(level + static_cast<float>(rng.uniform(-0.1, 0.1)), 0.0f, 1.0f);
    return img;
}

// malignant samples carry a bright top-left patch on a dark ground
ImageTensor patch_image(int side, bool with_patch, uint64_t seed) {
    ImageTensor img = noisy_image(side, 0.15f, seed);
    if (with_patch)
        for (int y = 0; y < side / 2; ++y)
            for (int x = 0; x < side / 2; ++x)
                for (int c = 0; c < 3; ++c) img.at(y, x, c) = std::min(1.0f, img.at(y, x, c) + 0.7f);
    return img;
}

// classifier rigged by hand: channel 0 measures local brightness, the later
// convs pass it through untouched, and only the malignant logit reads it
clf::Classifier brightness_classifier(int side) {
    clf::ClassifierSpec spec;
    clf::Classifier model(spec, side, 41);
    for (auto& p : model.params()) std::fill(p.value->data.begin(), p.value->data.end(), 0.0f);
    auto set = [&](const std::string& name, auto fill) {
        for (auto& p : model.params())
            if (p.name == name) fill(*p.value);
    };
    set("block1.conv1.weight", [](Tensor& w) {
        for (int i = 0; i < 27; ++i) w.data[static_cast<size_t>(i)] = 1.0f / 27.0f;
    });
    set("block2.conv1.weight", [](Tensor& w) {
        w.data[static_cast<size_t>(0 * w.shape[1] * 9 + 0 * 9 + 4)] = 1.0f;  // center tap
    });
    set("block3.conv1.weight", [](Tensor& w) {
        w.data[static_cast<size_t>(0 * w.shape[1] * 9 + 0 * 9 + 4)] = 1.0f;
    });
    set("head.fc.weight", [](Tensor& w) { w.data[static_cast<size_t>(w.shape[1])] = 1.0f; });
    return model;
}

}  // namespace

TEST_CASE("saliency_from matches a hand-worked example") {
    Tensor fmaps({1, 2, 2, 2});
    fmaps.data = {1, 2, 3, 4, 0, 1, 0, 0};
    Tensor grads({1, 2, 2, 2});
    grads.data = {0.5f, 0.5f, 0.5f, 0.5f, 1, -1, 2, -2};
    // channel weights: 0.5 and 0; map = 0.5 * [1,2,3,4] -> normalized by 2
    Tensor map = saliency_from(fmaps, grads);
    REQUIRE(map.shape == std::vector<int>{1, 1, 2, 2});
    CHECK(map.data[0] == 0.25f);
    CHECK(map.data[1] == 0.5f);
    CHECK(map.data[2] == 0.75f);
    CHECK(map.data[3] == 1.0f);
}

TEST_CASE("saliency_from rectifies negative evidence to an all-zero map") {
    Tensor fmaps({1, 1, 2, 2});
    fmaps.data = {1, 2, 3, 4};
    Tensor grads({1, 1, 2, 2});
    grads.data = {-1, -1, -1, -1};
    Tensor map = saliency_from(fmaps, grads);
    for (float v : map.data) CHECK(v == 0.0f);
}

TEST_CASE("saliency_from is invariant to positive gradient scaling") {
    Rng rng(88);
    Tensor fmaps({1, 3, 4, 4}), grads({1, 3, 4, 4});
    for (auto& v : fmaps.data) v = static_cast<float>(rng.uniform(0.0, 2.0));
    for (auto& v : grads.data) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    Tensor scaled = grads;
    for (auto& v : scaled.data) v *= 4.0f;  // power of two keeps f32 arithmetic exact
    Tensor a = saliency_from(fmaps, grads);
    Tensor b = saliency_from(fmaps, scaled);
    for (size_t i = 0; i < a.data.size(); ++i) CHECK(a.data[i] == b.data[i]);
}

TEST_CASE("saliency_from validates shapes") {
    Tensor batch2({2, 1, 2, 2}), g22({2, 1, 2, 2});
    CHECK_THROWS_AS(saliency_from(batch2, g22), ConfigError);
    Tensor f({1, 2, 2, 2}), g({1, 2, 2, 3});
    CHECK_THROWS_AS(saliency_from(f, g), ConfigError);
    Tensor rank3({2, 2, 2});
    CHECK_THROWS_AS(saliency_from(rank3, rank3), ConfigError);
}

TEST_CASE("grad_cam emits a normalized input-resolution map") {
    clf::ClassifierSpec spec;
    clf::Classifier model(spec, 16, 23);
    ImageTensor img = noisy_image(16, 0.5f, 61);
    SaliencyMap map = grad_cam(model, img, 1, "sample_a");
    CHECK(map.height == 16);
    CHECK(map.width == 16);
    CHECK(map.class_index == 1);
    CHECK(map.source_id == "sample_a");
    REQUIRE(map.values.size() == 256);
    float mx = 0.0f;
    for (float v : map.values) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
        mx = std::max(mx, v);
    }
    CHECK(mx == doctest::Approx(1.0f));
}

TEST_CASE("grad_cam is deterministic and class-sensitive") {
    clf::ClassifierSpec spec;
    clf::Classifier model(spec, 16, 29);
    ImageTensor img = noisy_image(16, 0.4f, 71);
    SaliencyMap a = grad_cam(model, img, 1);
    SaliencyMap b = grad_cam(model, img, 1);
    CHECK(a.values == b.values);
    SaliencyMap other = grad_cam(model, img, 0);
    CHECK(a.values != other.values);
}

TEST_CASE("grad_cam validates class index and input range") {
    clf::ClassifierSpec spec;
    clf::Classifier model(spec, 16, 31);
    ImageTensor img = noisy_image(16, 0.4f, 5);
    CHECK_THROWS_AS(grad_cam(model, img, 2), ConfigError);
    CHECK_THROWS_AS(grad_cam(model, img, -1), ConfigError);
    ImageTensor raw(16, 16, 3, RangeTag::raw_0_255);
    CHECK_THROWS_AS(grad_cam(model, raw, 1), DataError);
}

TEST_CASE("grad_cam highlights the region driving the malignant logit") {
    int side = 16;
    clf::Classifier model = brightness_classifier(side);
    ImageTensor mal = patch_image(side, true, derive_seed(900, "probe"));
    SaliencyMap map = grad_cam(model, mal, 1);

    double inside = 0.0, outside = 0.0;
    int n_in = 0, n_out = 0;
    for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x) {
            if (y < side / 2 && x < side / 2) {
                inside += map.at(y, x);
                ++n_in;
            } else {
                outside += map.at(y, x);
                ++n_out;
            }
        }
    CHECK(inside / n_in > outside / n_out);
}

TEST_CASE("export_features returns GAP activations untouched by the head") {
    clf::ClassifierSpec spec;
    clf::Classifier model(spec, 16, 37);
    LabelledDataset ds;
    for (int i = 0; i < 3; ++i) {
        LabelledSample s;
        s.id = "s" + std::to_string(i);
        s.label = i == 1 ? ClassLabel::malignant : ClassLabel::benign;
        s.provenance = i == 2 ? Provenance::synthetic : Provenance::original;
        s.image = noisy_image(16, 0.3f + 0.2f * i, 300 + i);
        ds.samples.push_back(std::move(s));
    }

    FeatureMatrix fm = export_features(model, ds);
    REQUIRE(fm.ids.size() == 3);
    CHECK(fm.ids[1] == "s1");
    CHECK(fm.labels[1] == ClassLabel::malignant);
    CHECK(fm.provenances[2] == Provenance::synthetic);
    REQUIRE(fm.rows.size() == 3);
    for (const auto& row : fm.rows) CHECK(row.size() == 64);

    // hand GAP: spatial mean of the post-pool feature maps per channel
    Tensor x = image_to_chw(ds.samples[0].image);
    Tensor h = model.features_post().forward(model.features_pre().forward(x, 0, false), 0, false);
    int hw = h.shape[2] * h.shape[3];
    for (int c = 0; c < 64; ++c) {
        double acc = 0.0;
        for (int p = 0; p < hw; ++p) acc += h.data[static_cast<size_t>(c) * hw + p];
        CHECK(fm.rows[0][static_cast<size_t>(c)] ==
              doctest::Approx(acc / hw).epsilon(1e-5));
    }

    // scrambling the FC head must not move the embedding
    for (auto& p : model.params())
        if (p.name == "head.fc.weight")
            for (auto& v : p.value->data) v = -v;
    FeatureMatrix fm2 = export_features(model, ds);
    CHECK(fm2.rows == fm.rows);
}

TEST_CASE("export_features rejects non-standardized samples by id") {
    clf::ClassifierSpec spec;
    clf::Classifier model(spec, 16, 39);
    LabelledDataset ds;
    LabelledSample s;
    s.id = "rawling";
    s.image = ImageTensor(16, 16, 3, RangeTag::raw_0_255);
    ds.samples.push_back(std::move(s));
    CHECK_THROWS_WITH_AS(export_features(model, ds), doctest::Contains("rawling"), DataError);
}

TEST_CASE("feature csv lists one labelled row per sample") {
    FeatureMatrix fm;
    fm.ids = {"a", "b"};
    fm.labels = {ClassLabel::benign, ClassLabel::malignant};
    fm.provenances = {Provenance::original, Provenance::synthetic};
    fm.rows = {{0.5f, 1.0f, -2.25f}, {0.0f, 3.5f, 10.0f}};
    auto path = temp_path("features.csv");
    write_feature_csv(fm, path);

    std::ifstream is(path);
    std::string line;
    REQUIRE(std::getline(is, line));
    CHECK(line == "id,label,provenance,f_0,f_1,f_2");
    REQUIRE(std::getline(is, line));
    CHECK(line == "a,benign,original,0.5,1,-2.25");
    REQUIRE(std::getline(is, line));
    CHECK(line == "b,malignant,synthetic,0,3.5,10");
    CHECK_FALSE(std::getline(is, line));
}

TEST_CASE("saliency csv writes raw map values row by row") {
    SaliencyMap map;
    map.height = 2;
    map.width = 2;
    map.values = {0.0f, 0.25f, 0.5f, 1.0f};
    auto path = temp_path("saliency.csv");
    write_saliency_csv(map, path);

    std::ifstream is(path);
    std::string line;
    REQUIRE(std::getline(is, line));
    CHECK(line == "0,0.25");
    REQUIRE(std::getline(is, line));
    CHECK(line == "0.5,1");
}

TEST_CASE("saliency png decodes to a heat ramp of the right size") {
    SaliencyMap map;
    map.height = 8;
    map.width = 8;
    map.values.assign(64, 0.0f);
    map.values[0] = 1.0f;  // hottest at top-left, coldest elsewhere
    auto path = temp_path("saliency.png");
    write_saliency_png(map, path);

    ImageTensor img = decode_image(path);
    CHECK(img.height == 8);
    CHECK(img.width == 8);
    CHECK(img.channels == 3);
    // ramp endpoints: v=1 is red-dominant, v=0 is blue-dominant
    CHECK(img.at(0, 0, 0) == 255.0f);
    CHECK(img.at(0, 0, 2) == 0.0f);
    CHECK(img.at(7, 7, 2) == 255.0f);
    CHECK(img.at(7, 7, 0) == 0.0f);
}

TEST_CASE("saliency overlay blends heat over the input") {
    SaliencyMap map;
    map.height = 4;
    map.width = 4;
    map.values.assign(16, 0.0f);

    ImageTensor base(4, 4, 3, RangeTag::standardized_0_1);
    for (auto& v : base.values) v = 0.5f;
    auto path = temp_path("overlay.png");
    write_saliency_overlay_png(map, base, path);

    // v=0 heat is (0,128,255); base is 127.5 after rescale; blend at 0.4 opacity
    ImageTensor img = decode_image(path);
    CHECK(img.at(0, 0, 0) == doctest::Approx(0.6 * 127.5).epsilon(0.02));
    CHECK(img.at(0, 0, 2) == doctest::Approx(0.6 * 127.5 + 0.4 * 255.0).epsilon(0.02));

    ImageTensor wrong(8, 8, 3, RangeTag::standardized_0_1);
    CHECK_THROWS_AS(write_saliency_overlay_png(map, wrong, path), EvalError);
    ImageTensor tanh_img(4, 4, 3, RangeTag::tanh_m1_1);
    CHECK_THROWS_AS(write_saliency_overlay_png(map, tanh_img, path), EvalError);
}
