#include "data/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>
#include <numeric>
#include <sstream>

#include "common/error.hpp"
#include "common/rng.hpp"

namespace cajscc::data {

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    return std::string(std::istreambuf_iterator<char>(in), {});
}

void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing '" + path + "'");
}

template <typename T>
void put(std::string& buf, T v) {
    char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    buf.append(b, sizeof(T));
}

template <typename T>
T get(const std::string& buf, std::size_t& pos, const std::string& path) {
    if (pos + sizeof(T) > buf.size()) {
        throw FormatError("'" + path + "' truncated at byte offset " + std::to_string(pos));
    }
    T v;
    std::memcpy(&v, buf.data() + pos, sizeof(T));
    pos += sizeof(T);
    return v;
}

}  // namespace

ImageSet::ImageSet(ImageShape shape, std::vector<double> pixels, std::vector<int> labels)
    : shape_(shape), pixels_(std::move(pixels)), labels_(std::move(labels)) {
    if (shape_.size() == 0) throw ConfigError("image shape must be positive");
    if (pixels_.size() % shape_.size() != 0) throw DimensionError("pixel buffer is not a whole number of images");
    for (double v : pixels_) {
        if (!(v >= 0.0 && v <= 1.0)) throw FormatError("pixel value outside [0, 1]");
    }
    if (!labels_.empty() && labels_.size() != count()) throw DimensionError("label count differs from image count");
}

std::span<const double> ImageSet::image(std::size_t i) const {
    if (i >= count()) throw DimensionError("image index " + std::to_string(i) + " out of range");
    return {pixels_.data() + i * shape_.size(), shape_.size()};
}

nn::Tensor ImageSet::image_tensor(std::size_t i) const {
    const auto px = image(i);
    return nn::Tensor({shape_.channels, shape_.height, shape_.width}, std::vector<double>(px.begin(), px.end()));
}

nn::Tensor ImageSet::batch(std::span<const std::size_t> indices) const {
    nn::Tensor t({indices.size(), shape_.channels, shape_.height, shape_.width});
    for (std::size_t b = 0; b < indices.size(); ++b) {
        const auto px = image(indices[b]);
        std::copy(px.begin(), px.end(), t.data().begin() + static_cast<std::ptrdiff_t>(b * shape_.size()));
    }
    return t;
}

ImageSet ImageSet::subset(std::span<const std::size_t> indices) const {
    std::vector<double> px;
    px.reserve(indices.size() * shape_.size());
    std::vector<int> lb;
    for (auto i : indices) {
        const auto im = image(i);
        px.insert(px.end(), im.begin(), im.end());
        if (!labels_.empty()) lb.push_back(labels_[i]);
    }
    return ImageSet(shape_, std::move(px), std::move(lb));
}

ImageSet load_cifar10(std::span<const std::string> paths) {
    const ImageShape shape{3, 32, 32};
    std::vector<double> pixels;
    std::vector<int> labels;
    for (const auto& path : paths) {
        const std::string bytes = read_file(path);
        if (bytes.empty() || bytes.size() % kCifarRecordBytes != 0) {
            const std::size_t bad = (bytes.size() / kCifarRecordBytes) * kCifarRecordBytes;
            throw FormatError("'" + path + "' is not a whole number of 3073-byte CIFAR-10 records (" +
                              std::to_string(bytes.size()) + " bytes, incomplete record at byte offset " +
                              std::to_string(bad) + ")");
        }
        for (std::size_t off = 0; off < bytes.size(); off += kCifarRecordBytes) {
            labels.push_back(static_cast<unsigned char>(bytes[off]));
            for (std::size_t i = 1; i < kCifarRecordBytes; ++i) {
                pixels.push_back(static_cast<double>(static_cast<unsigned char>(bytes[off + i])) / 255.0);
            }
        }
    }
    return ImageSet(shape, std::move(pixels), std::move(labels));
}

ImageSet synthetic_set(std::size_t count, const ImageShape& shape, std::uint64_t seed) {
    constexpr int kTerms = 4;
    std::vector<double> pixels(count * shape.size());
    for (std::size_t n = 0; n < count; ++n) {
        Rng rng(seed, "synthetic", n);
        double* img = pixels.data() + n * shape.size();
        for (std::size_t c = 0; c < shape.channels; ++c) {
            double amp[kTerms], fx[kTerms], fy[kTerms], phase[kTerms];
            for (int t = 0; t < kTerms; ++t) {
                amp[t] = rng.uniform(0.2, 1.0);
                fx[t] = static_cast<double>(rng.index(3));
                fy[t] = static_cast<double>(rng.index(3));
                phase[t] = rng.uniform(0.0, 2.0 * std::numbers::pi);
            }
            for (std::size_t y = 0; y < shape.height; ++y)
                for (std::size_t x = 0; x < shape.width; ++x) {
                    double v = 0.0;
                    for (int t = 0; t < kTerms; ++t) {
                        v += amp[t] * std::cos(2.0 * std::numbers::pi *
                                                   (fx[t] * static_cast<double>(x) / static_cast<double>(shape.width) +
                                                    fy[t] * static_cast<double>(y) / static_cast<double>(shape.height)) +
                                               phase[t]);
                    }
                    img[(c * shape.height + y) * shape.width + x] = v;
                }
        }
        const auto [lo, hi] = std::minmax_element(img, img + shape.size());
        const double lo_v = *lo, span = *hi - *lo;
        for (std::size_t i = 0; i < shape.size(); ++i) {
            img[i] = span > 0.0 ? std::clamp((img[i] - lo_v) / span, 0.0, 1.0) : 0.5;
        }
    }
    return ImageSet(shape, std::move(pixels));
}

CropResult random_crop(const ImageSet& set, std::size_t size, std::uint64_t seed) {
    const ImageShape& s = set.shape();
    if (size == 0 || size > s.height || size > s.width) {
        throw ConfigError("random_crop: crop size " + std::to_string(size) + " exceeds image " +
                          std::to_string(s.height) + "x" + std::to_string(s.width));
    }
    const ImageShape out{s.channels, size, size};
    std::vector<double> pixels(set.count() * out.size());
    CropResult result;
    Rng rng(seed, "crop");
    for (std::size_t n = 0; n < set.count(); ++n) {
        const std::size_t top = rng.index(s.height - size + 1);
        const std::size_t left = rng.index(s.width - size + 1);
        result.corners.emplace_back(top, left);
        const auto src = set.image(n);
        for (std::size_t c = 0; c < s.channels; ++c)
            for (std::size_t y = 0; y < size; ++y)
                for (std::size_t x = 0; x < size; ++x) {
                    pixels[n * out.size() + (c * size + y) * size + x] =
                        src[(c * s.height + top + y) * s.width + left + x];
                }
    }
    result.images = ImageSet(out, std::move(pixels), set.labels());
    return result;
}

std::pair<ImageSet, ImageSet> split(const ImageSet& set, double val_fraction, std::uint64_t seed) {
    if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
        throw ConfigError("split: validation fraction must lie strictly between 0 and 1");
    }
    const std::size_t n = set.count();
    const auto n_val = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(n)));
    if (n_val == 0 || n_val >= n) throw ConfigError("split: set of " + std::to_string(n) + " images is too small");
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(seed, "split");
    std::shuffle(idx.begin(), idx.end(), rng.engine());
    const std::span<const std::size_t> all(idx);
    return {set.subset(all.subspan(n_val)), set.subset(all.first(n_val))};
}

void dump_ppm(std::span<const double> image, const ImageShape& shape, const std::string& path) {
    if (shape.channels != 1 && shape.channels != 3) throw ConfigError("dump_ppm: need 1 or 3 channels");
    if (image.size() != shape.size()) throw DimensionError("dump_ppm: pixel count does not match shape");
    std::ostringstream header;
    header << "P6\n" << shape.width << ' ' << shape.height << "\n255\n";
    std::string bytes = header.str();
    const std::size_t plane = shape.height * shape.width;
    for (std::size_t i = 0; i < plane; ++i)
        for (std::size_t c = 0; c < 3; ++c) {
            const double v = image[(shape.channels == 1 ? 0 : c) * plane + i];
            bytes.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0))));
        }
    write_file(path, bytes);
}

std::pair<ImageShape, std::vector<double>> load_ppm(const std::string& path) {
    const std::string bytes = read_file(path);
    std::istringstream in(bytes);
    std::string magic;
    std::size_t w = 0, h = 0, maxval = 0;
    in >> magic >> w >> h >> maxval;
    if (magic != "P6" || !in || maxval != 255 || w == 0 || h == 0) {
        throw FormatError("'" + path + "' is not a binary P6 image with maxval 255");
    }
    const auto pos = static_cast<std::size_t>(in.tellg()) + 1;  // one whitespace byte after maxval
    const std::size_t plane = w * h;
    if (bytes.size() < pos + 3 * plane) throw FormatError("'" + path + "' pixel data truncated");
    ImageShape shape{3, h, w};
    std::vector<double> px(shape.size());
    for (std::size_t i = 0; i < plane; ++i)
        for (std::size_t c = 0; c < 3; ++c)
            px[c * plane + i] = static_cast<double>(static_cast<unsigned char>(bytes[pos + 3 * i + c])) / 255.0;
    return {shape, std::move(px)};
}

void write_raw(const ImageSet& set, const std::string& path) {
    static_assert(std::endian::native == std::endian::little, "raw image I/O assumes a little-endian host");
    std::string bytes = "IMGR";
    put<std::uint32_t>(bytes, static_cast<std::uint32_t>(set.count()));
    put<std::uint32_t>(bytes, static_cast<std::uint32_t>(set.shape().channels));
    put<std::uint32_t>(bytes, static_cast<std::uint32_t>(set.shape().height));
    put<std::uint32_t>(bytes, static_cast<std::uint32_t>(set.shape().width));
    for (std::size_t n = 0; n < set.count(); ++n)
        for (double v : set.image(n)) put<float>(bytes, static_cast<float>(v));
    write_file(path, bytes);
}

ImageSet load_raw(const std::string& path) {
    const std::string bytes = read_file(path);
    if (bytes.size() < 4 || bytes.compare(0, 4, "IMGR") != 0) throw FormatError("'" + path + "' is not an IMGR file");
    std::size_t pos = 4;
    const auto count = get<std::uint32_t>(bytes, pos, path);
    ImageShape shape;
    shape.channels = get<std::uint32_t>(bytes, pos, path);
    shape.height = get<std::uint32_t>(bytes, pos, path);
    shape.width = get<std::uint32_t>(bytes, pos, path);
    std::vector<double> px(static_cast<std::size_t>(count) * shape.size());
    for (auto& v : px) v = get<float>(bytes, pos, path);
    if (pos != bytes.size()) throw FormatError("'" + path + "' has trailing bytes at offset " + std::to_string(pos));
    return ImageSet(shape, std::move(px));
}

}  // namespace cajscc::data
