#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "common/error.hpp"
#include "data/dataset.hpp"

using namespace cajscc;
namespace fs = std::filesystem;

namespace {

fs::path temp(const std::string& name) { return fs::temp_directory_path() / ("cajscc_test_" + name); }

void write_bytes(const fs::path& p, const std::vector<unsigned char>& bytes) {
    std::ofstream out(p, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("CIFAR-10 binary records") {
    std::vector<unsigned char> bytes(2 * data::kCifarRecordBytes);
    for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = static_cast<unsigned char>((i * 37) % 256);
    bytes[0] = 7;
    bytes[1] = 255;
    bytes[2] = 0;
    const auto path = temp("cifar.bin");
    write_bytes(path, bytes);
    const std::vector<std::string> paths{path.string()};
    const auto set = data::load_cifar10(paths);
    CHECK(set.count() == 2);
    CHECK(set.shape() == data::ImageShape{3, 32, 32});
    CHECK(set.labels()[0] == 7);
    CHECK(set.image(0)[0] == 1.0);
    CHECK(set.image(0)[1] == 0.0);
    for (std::size_t r = 0; r < 2; ++r) {
        const auto img = set.image(r);
        for (std::size_t k = 0; k < 3072; ++k) {
            CHECK(std::lround(img[k] * 255.0) == bytes[r * data::kCifarRecordBytes + 1 + k]);
        }
    }

    bytes.resize(3072);
    write_bytes(path, bytes);
    CHECK_THROWS_AS(data::load_cifar10(paths), FormatError);
    fs::remove(path);
}

TEST_CASE("synthetic images") {
    const data::ImageShape shape{1, 8, 8};
    const auto a = data::synthetic_set(10, shape, 1);
    const auto b = data::synthetic_set(10, shape, 1);
    const auto c = data::synthetic_set(10, shape, 2);
    double diff = 0.0;
    for (std::size_t i = 0; i < 10; ++i) {
        CHECK(std::equal(a.image(i).begin(), a.image(i).end(), b.image(i).begin()));
        for (std::size_t k = 0; k < 64; ++k) {
            CHECK(a.image(i)[k] >= 0.0);
            CHECK(a.image(i)[k] <= 1.0);
            diff = std::max(diff, std::abs(a.image(i)[k] - c.image(i)[k]));
        }
    }
    CHECK(diff > 0.01);
}

TEST_CASE("random crop") {
    const auto set = data::synthetic_set(5, {3, 32, 32}, 3);
    const auto same = data::random_crop(set, 32, 1);
    for (std::size_t i = 0; i < 5; ++i) CHECK(std::equal(set.image(i).begin(), set.image(i).end(), same.images.image(i).begin()));

    const auto crop = data::random_crop(set, 16, 2);
    CHECK(crop.images.shape() == data::ImageShape{3, 16, 16});
    for (std::size_t i = 0; i < 5; ++i) {
        const auto [top, left] = crop.corners[i];
        for (std::size_t c = 0; c < 3; ++c)
            for (std::size_t y = 0; y < 16; ++y)
                for (std::size_t x = 0; x < 16; ++x) {
                    CHECK(crop.images.image(i)[(c * 16 + y) * 16 + x] ==
                          set.image(i)[(c * 32 + top + y) * 32 + left + x]);
                }
    }
    CHECK_THROWS_AS(data::random_crop(set, 33, 1), ConfigError);
}

TEST_CASE("train/validation split") {
    std::vector<double> px(100);
    for (std::size_t i = 0; i < 100; ++i) px[i] = static_cast<double>(i) / 99.0;
    const data::ImageSet set({1, 1, 1}, px);
    const auto [train, val] = data::split(set, 0.1, 4);
    CHECK(train.count() == 90);
    CHECK(val.count() == 10);
    std::set<double> seen;
    for (std::size_t i = 0; i < train.count(); ++i) seen.insert(train.image(i)[0]);
    for (std::size_t i = 0; i < val.count(); ++i) seen.insert(val.image(i)[0]);
    CHECK(seen.size() == 100);
    CHECK_THROWS_AS(data::split(set, 0.0, 4), ConfigError);
}

TEST_CASE("PPM and raw round trips") {
    const auto set = data::synthetic_set(2, {3, 5, 7}, 5);
    const auto ppm = temp("img.ppm");
    data::dump_ppm(set.image(1), set.shape(), ppm.string());
    const auto [shape, px] = data::load_ppm(ppm.string());
    CHECK(shape == set.shape());
    for (std::size_t k = 0; k < px.size(); ++k) CHECK(std::abs(px[k] - set.image(1)[k]) <= 0.5 / 255.0 + 1e-12);

    const auto gray = data::synthetic_set(1, {1, 4, 4}, 6);
    data::dump_ppm(gray.image(0), gray.shape(), ppm.string());
    const auto [gshape, gpx] = data::load_ppm(ppm.string());
    CHECK(gshape.channels == 3);
    CHECK(gpx[0] == gpx[16]);
    fs::remove(ppm);

    CHECK_THROWS_AS(data::dump_ppm(gray.image(0), gray.shape(), "/nonexistent-dir/x.ppm"), IoError);

    const auto raw = temp("set.raw");
    data::write_raw(set, raw.string());
    const auto back = data::load_raw(raw.string());
    CHECK(back.shape() == set.shape());
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t k = 0; k < set.shape().size(); ++k)
            CHECK(back.image(i)[k] == static_cast<double>(static_cast<float>(set.image(i)[k])));
    fs::remove(raw);
}

TEST_CASE("pixel range is enforced") {
    CHECK_THROWS_AS(data::ImageSet({1, 1, 2}, {0.5, 1.5}), FormatError);
}
