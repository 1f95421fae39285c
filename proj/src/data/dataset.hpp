#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tensor/tensor.hpp"

namespace cajscc::data {

struct ImageShape {
    std::size_t channels = 3;
    std::size_t height = 32;
    std::size_t width = 32;
    std::size_t size() const { return channels * height * width; }
    bool operator==(const ImageShape&) const = default;
};

// Immutable set of equally-shaped images with pixels in [0, 1], stored
// channel-major per image.
class ImageSet {
public:
    ImageSet() = default;
    ImageSet(ImageShape shape, std::vector<double> pixels, std::vector<int> labels = {});

    std::size_t count() const { return shape_.size() == 0 ? 0 : pixels_.size() / shape_.size(); }
    bool empty() const { return count() == 0; }
    const ImageShape& shape() const { return shape_; }
    std::span<const double> image(std::size_t i) const;
    const std::vector<int>& labels() const { return labels_; }

    nn::Tensor image_tensor(std::size_t i) const;                  // [c, h, w]
    nn::Tensor batch(std::span<const std::size_t> indices) const;  // [B, c, h, w]
    ImageSet subset(std::span<const std::size_t> indices) const;

private:
    ImageShape shape_{};
    std::vector<double> pixels_;
    std::vector<int> labels_;
};

// CIFAR-10 binary batches: 3073-byte records (label, then 1024 R, 1024 G,
// 1024 B bytes, row-major 32x32). Files are concatenated in the given order.
inline constexpr std::size_t kCifarRecordBytes = 3073;
ImageSet load_cifar10(std::span<const std::string> paths);

// Smooth images: a few random low-frequency cosines per channel, rescaled
// per image to span [0, 1].
ImageSet synthetic_set(std::size_t count, const ImageShape& shape, std::uint64_t seed);

struct CropResult {
    ImageSet images;
    std::vector<std::pair<std::size_t, std::size_t>> corners;  // (top, left) per image
};
CropResult random_crop(const ImageSet& set, std::size_t size, std::uint64_t seed);

// Shuffled, disjoint split; validation gets round(val_fraction * count).
std::pair<ImageSet, ImageSet> split(const ImageSet& set, double val_fraction, std::uint64_t seed);

// Binary P6 with maxval 255; single-channel images are written as gray RGB.
void dump_ppm(std::span<const double> image, const ImageShape& shape, const std::string& path);
// Reads a binary P6 file into a 3-channel image in [0, 1].
std::pair<ImageShape, std::vector<double>> load_ppm(const std::string& path);

// Raw tensor file: "IMGR" | u32 count | u32 c | u32 h | u32 w | f32 pixels.
void write_raw(const ImageSet& set, const std::string& path);
ImageSet load_raw(const std::string& path);

}  // namespace cajscc::data
