#include <cmath>
#include <filesystem>

#include <doctest.h>

#include "melanet/errors.hpp"
#include "melanet/image.hpp"
#include "melanet/image_io.hpp"
#include "melanet/rng.hpp"

using namespace melanet;

namespace {

ImageTensor random_raw(int h, int w, int c, uint64_t seed) {
    ImageTensor img(h, w, c);
    Rng rng(seed);
    for (auto& v : img.values) v = static_cast<float>(rng.uniform(0.0, 255.0));
    return img;
}

}  // namespace

TEST_CASE("pad_and_resize squares a rectangular image with centered padding") {
    // 2x4 image: padding adds one zero row above and one below
    ImageTensor img(2, 4, 1);
    for (auto& v : img.values) v = 200.0f;
    ImageTensor out = pad_and_resize(img, 8);
    CHECK(out.height == 8);
    CHECK(out.width == 8);
    // content occupies the middle rows; the first and last row come from the
    // zero padding
    CHECK(out.at(0, 4, 0) == doctest::Approx(0.0f));
    CHECK(out.at(7, 4, 0) == doctest::Approx(0.0f));
    CHECK(out.at(4, 4, 0) == doctest::Approx(200.0f));
}

TEST_CASE("pad_and_resize on an already conforming image is the identity") {
    ImageTensor img = random_raw(16, 16, 3, 1);
    ImageTensor out = pad_and_resize(img, 16);
    REQUIRE(out.values.size() == img.values.size());
    for (size_t i = 0; i < img.values.size(); ++i) CHECK(out.values[i] == img.values[i]);
}

TEST_CASE("pad_and_resize to a constant image stays constant") {
    ImageTensor img(10, 6, 3);
    for (auto& v : img.values) v = 128.0f;
    ImageTensor out = pad_and_resize(img, 8);
    // center pixels keep the constant (borders mix with the zero padding)
    CHECK(out.at(4, 4, 0) == doctest::Approx(128.0f));
    CHECK(out.at(4, 4, 2) == doctest::Approx(128.0f));
}

TEST_CASE("pad_and_resize rejects tiny targets") {
    ImageTensor img = random_raw(16, 16, 3, 2);
    CHECK_THROWS_AS(pad_and_resize(img, 7), DataError);
}

TEST_CASE("standardize maps min to 0 and max to 1") {
    ImageTensor img = random_raw(5, 5, 3, 3);
    img.values[0] = 13.0f;
    img.values[1] = 201.0f;
    for (size_t i = 2; i < img.values.size(); ++i)
        img.values[i] = std::clamp(img.values[i], 13.0f, 201.0f);
    ImageTensor out = standardize(img);
    CHECK(out.range_tag == RangeTag::standardized_0_1);
    float lo = 1.0f, hi = 0.0f;
    for (float v : out.values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
    }
    CHECK(lo == doctest::Approx(0.0f));
    CHECK(hi == doctest::Approx(1.0f));
}

TEST_CASE("standardize of a constant image is all zeros") {
    ImageTensor img(4, 4, 1);
    for (auto& v : img.values) v = 77.0f;
    ImageTensor out = standardize(img);
    for (float v : out.values) CHECK(v == 0.0f);
}

TEST_CASE("standardize rejects non-raw input") {
    ImageTensor img(4, 4, 1, RangeTag::standardized_0_1);
    CHECK_THROWS_AS(standardize(img), DataError);
}

TEST_CASE("tanh range round-trips standardized pixels") {
    ImageTensor img = standardize(random_raw(6, 6, 3, 4));
    ImageTensor tanh_img = to_tanh_range(img);
    CHECK(tanh_img.range_tag == RangeTag::tanh_m1_1);
    for (float v : tanh_img.values) {
        CHECK(v >= -1.0f);
        CHECK(v <= 1.0f);
    }
    ImageTensor back = from_tanh_range(tanh_img);
    for (size_t i = 0; i < img.values.size(); ++i)
        CHECK(back.values[i] == doctest::Approx(img.values[i]).epsilon(1e-6));
    CHECK_THROWS_AS(to_tanh_range(tanh_img), DataError);
    CHECK_THROWS_AS(from_tanh_range(img), DataError);
}

TEST_CASE("image/chw conversion round-trips and lays out channels first") {
    ImageTensor img = random_raw(3, 5, 3, 5);
    Tensor t = image_to_chw(img);
    REQUIRE(t.shape == std::vector<int>({1, 3, 3, 5}));
    CHECK(t.at(0, 2, 1, 4) == img.at(1, 4, 2));
    ImageTensor back = chw_to_image(t, img.range_tag);
    CHECK(back.values == img.values);
}

TEST_CASE("rgb/hsv round-trip and primary hues") {
    float h, s, v;
    rgb_to_hsv(1.0f, 0.0f, 0.0f, h, s, v);
    CHECK(h == doctest::Approx(0.0f));
    CHECK(s == doctest::Approx(1.0f));
    CHECK(v == doctest::Approx(1.0f));
    rgb_to_hsv(0.0f, 1.0f, 0.0f, h, s, v);
    CHECK(h == doctest::Approx(1.0f / 3.0f));
    rgb_to_hsv(0.0f, 0.0f, 1.0f, h, s, v);
    CHECK(h == doctest::Approx(2.0f / 3.0f));

    Rng rng(6);
    for (int i = 0; i < 200; ++i) {
        float r = static_cast<float>(rng.uniform()), g = static_cast<float>(rng.uniform()),
              b = static_cast<float>(rng.uniform());
        rgb_to_hsv(r, g, b, h, s, v);
        float r2, g2, b2;
        hsv_to_rgb(h, s, v, r2, g2, b2);
        CHECK(r2 == doctest::Approx(r).epsilon(1e-4));
        CHECK(g2 == doctest::Approx(g).epsilon(1e-4));
        CHECK(b2 == doctest::Approx(b).epsilon(1e-4));
    }
}

TEST_CASE("saturation-weighted mean hue finds a pure color") {
    ImageTensor img(4, 4, 3, RangeTag::standardized_0_1);
    float r, g, b;
    hsv_to_rgb(0.4f, 0.8f, 0.7f, r, g, b);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) {
            img.at(y, x, 0) = r;
            img.at(y, x, 1) = g;
            img.at(y, x, 2) = b;
        }
    CHECK(saturation_weighted_mean_hue(img) == doctest::Approx(0.4).epsilon(1e-4));
}

TEST_CASE("achromatic images report hue 0") {
    ImageTensor img(4, 4, 3);
    for (auto& v : img.values) v = 100.0f;
    CHECK(saturation_weighted_mean_hue(img) == 0.0);
}

TEST_CASE("saturation threshold excludes a weakly tinted background") {
    // 3 pixels of faint hue-0.9 tint (s = 0.1), 1 pixel of strong hue-0.4 (s = 0.8)
    ImageTensor img(1, 4, 3, RangeTag::standardized_0_1);
    float r, g, b;
    hsv_to_rgb(0.9f, 0.1f, 0.6f, r, g, b);
    for (int x = 0; x < 3; ++x) {
        img.at(0, x, 0) = r;
        img.at(0, x, 1) = g;
        img.at(0, x, 2) = b;
    }
    hsv_to_rgb(0.4f, 0.8f, 0.7f, r, g, b);
    img.at(0, 3, 0) = r;
    img.at(0, 3, 1) = g;
    img.at(0, 3, 2) = b;

    double unthresholded = saturation_weighted_mean_hue(img);
    double expected_blend = (3 * 0.1 * 0.9 + 0.8 * 0.4) / (3 * 0.1 + 0.8);
    CHECK(unthresholded == doctest::Approx(expected_blend).epsilon(1e-3));
    CHECK(saturation_weighted_mean_hue(img, 0.3) == doctest::Approx(0.4).epsilon(1e-3));

    // threshold above every saturation leaves no qualifying pixel
    CHECK(saturation_weighted_mean_hue(img, 0.95) == 0.0);
}

TEST_CASE("validate flags out-of-range standardized values") {
    ImageTensor img(2, 2, 3, RangeTag::standardized_0_1);
    img.values[5] = 1.5f;
    CHECK_THROWS_AS(img.validate(), DataError);
}

TEST_CASE("png encode/decode round-trips quantized pixels") {
    auto dir = std::filesystem::temp_directory_path() / "melanet_test_image";
    std::filesystem::create_directories(dir);
    ImageTensor img = quantize_to_raw(random_raw(9, 7, 3, 8));
    auto path = dir / "roundtrip.png";
    encode_png(img, path);
    ImageTensor back = decode_image(path);
    REQUIRE(back.height == img.height);
    REQUIRE(back.width == img.width);
    REQUIRE(back.channels == img.channels);
    for (size_t i = 0; i < img.values.size(); ++i) CHECK(back.values[i] == img.values[i]);
    CHECK_THROWS_AS(decode_image(dir / "missing.png"), DataError);
}

TEST_CASE("quantize_to_raw rescales each range convention") {
    ImageTensor std_img(1, 2, 1, RangeTag::standardized_0_1);
    std_img.values = {0.0f, 1.0f};
    auto q = quantize_to_raw(std_img);
    CHECK(q.values[0] == 0.0f);
    CHECK(q.values[1] == 255.0f);

    ImageTensor tanh_img(1, 2, 1, RangeTag::tanh_m1_1);
    tanh_img.values = {-1.0f, 1.0f};
    q = quantize_to_raw(tanh_img);
    CHECK(q.values[0] == 0.0f);
    CHECK(q.values[1] == 255.0f);
}
