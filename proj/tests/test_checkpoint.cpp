#include <doctest.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "melanet/errors.hpp"
#include "melanet/nn/checkpoint.hpp"

using namespace melanet;
using namespace melanet::nn;

namespace {

std::filesystem::path temp_file(const std::string& tag) {
    auto dir = std::filesystem::temp_directory_path() / "melanet_ckpt_tests";
    std::filesystem::create_directories(dir);
    return dir / (tag + ".ckpt");
}

std::vector<char> read_all(const std::filesystem::path& p) {
    std::ifstream is(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

Checkpoint sample_checkpoint() {
    Checkpoint c;
    c.metadata["kind"] = "test";
    c.metadata["nested"] = {{"epoch", 7}, {"lr", 0.25}};
    c.put_f32("b.weight", {2, 3}, {1.0f, -2.0f, 3.5f, 0.0f, 4.25f, -0.125f});
    c.put_f32("a.bias", {2}, {0.5f, 0.25f});
    c.put_f64("history.cycle", {3}, {1.5, 0.75, 0.5});
    return c;
}

}  // namespace

TEST_CASE("arrays and metadata roundtrip exactly") {
    auto path = temp_file("roundtrip");
    Checkpoint c = sample_checkpoint();
    c.save(path);

    Checkpoint back = Checkpoint::load(path);
    CHECK(back.metadata["kind"] == "test");
    CHECK(back.metadata["nested"]["epoch"] == 7);
    CHECK(back.metadata["nested"]["lr"] == 0.25);

    const auto& w = back.get_f32("b.weight");
    CHECK(w.shape == std::vector<int>{2, 3});
    CHECK(w.data == std::vector<float>{1.0f, -2.0f, 3.5f, 0.0f, 4.25f, -0.125f});
    const auto& h = back.get_f64("history.cycle");
    CHECK(h.shape == std::vector<int>{3});
    CHECK(h.data == std::vector<double>{1.5, 0.75, 0.5});

    CHECK(back.has_f32("a.bias"));
    CHECK_FALSE(back.has_f32("a.missing"));
    CHECK_FALSE(back.has_f64("b.weight"));  // dtypes are separate namespaces
    std::filesystem::remove(path);
}

TEST_CASE("save, load, save is byte identical") {
    auto p1 = temp_file("bytes1");
    auto p2 = temp_file("bytes2");
    Checkpoint c = sample_checkpoint();
    c.save(p1);
    Checkpoint::load(p1).save(p2);
    CHECK(read_all(p1) == read_all(p2));
    std::filesystem::remove(p1);
    std::filesystem::remove(p2);
}

TEST_CASE("insertion order does not change the file") {
    auto p1 = temp_file("order1");
    auto p2 = temp_file("order2");
    Checkpoint a;
    a.put_f32("x", {1}, {1.0f});
    a.put_f32("y", {1}, {2.0f});
    Checkpoint b;
    b.put_f32("y", {1}, {2.0f});
    b.put_f32("x", {1}, {1.0f});
    a.save(p1);
    b.save(p2);
    CHECK(read_all(p1) == read_all(p2));
    std::filesystem::remove(p1);
    std::filesystem::remove(p2);
}

TEST_CASE("put validates shape against data size, get names the missing array") {
    Checkpoint c;
    CHECK_THROWS_AS(c.put_f32("w", {2, 2}, {1.0f}), DataError);
    CHECK_THROWS_AS(c.put_f64("h", {3}, {1.0}), DataError);
    try {
        c.get_f32("gen.conv1.weight");
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("gen.conv1.weight") != std::string::npos);
    }
}

TEST_CASE("overwriting a name keeps the latest array") {
    Checkpoint c;
    c.put_f32("w", {1}, {1.0f});
    c.put_f32("w", {2}, {3.0f, 4.0f});
    CHECK(c.get_f32("w").shape == std::vector<int>{2});
}

TEST_CASE("bad magic is rejected") {
    auto path = temp_file("magic");
    std::ofstream os(path, std::ios::binary);
    os << "NOTMYFMTxxxxxxxxxxxxxxxx";
    os.close();
    CHECK_THROWS_AS(Checkpoint::load(path), DataError);
    std::filesystem::remove(path);
}

TEST_CASE("unsupported version is rejected") {
    auto path = temp_file("version");
    Checkpoint c = sample_checkpoint();
    c.save(path);
    // bump the version field that follows the 8-byte magic
    std::fstream fs(path, std::ios::binary | std::ios::in | std::ios::out);
    fs.seekp(8);
    uint32_t v = 99;
    fs.write(reinterpret_cast<const char*>(&v), sizeof(v));
    fs.close();
    try {
        Checkpoint::load(path);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("99") != std::string::npos);
    }
    std::filesystem::remove(path);
}

TEST_CASE("truncated files name the field that was cut short") {
    auto path = temp_file("trunc");
    Checkpoint c = sample_checkpoint();
    c.save(path);
    auto bytes = read_all(path);

    auto truncated = temp_file("trunc_cut");
    std::ofstream os(truncated, std::ios::binary | std::ios::trunc);
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 7));
    os.close();
    CHECK_THROWS_AS(Checkpoint::load(truncated), DataError);

    // cutting inside the header hits a named field too
    std::ofstream os2(truncated, std::ios::binary | std::ios::trunc);
    os2.write(bytes.data(), 10);
    os2.close();
    CHECK_THROWS_AS(Checkpoint::load(truncated), DataError);

    std::filesystem::remove(path);
    std::filesystem::remove(truncated);
}

TEST_CASE("missing file and corrupt metadata are reported") {
    CHECK_THROWS_AS(Checkpoint::load(temp_file("does_not_exist")), DataError);
}

TEST_CASE("empty checkpoint still roundtrips") {
    auto path = temp_file("empty");
    Checkpoint c;
    c.save(path);
    Checkpoint back = Checkpoint::load(path);
    CHECK(back.arrays_f32.empty());
    CHECK(back.arrays_f64.empty());
    CHECK(back.metadata == nlohmann::json::object());
    std::filesystem::remove(path);
}
