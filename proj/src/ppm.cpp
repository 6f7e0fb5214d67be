#include "faae/ppm.hpp"

#include <cmath>
#include <fstream>
#include <iterator>

#include "faae/error.hpp"

namespace faae {

Image image_from_chw(std::span<const float> chw, std::size_t height, std::size_t width) {
    if (chw.size() != 3 * height * width) {
        throw DimensionError("image_from_chw: " + std::to_string(chw.size()) + " values for a " +
                             std::to_string(height) + "x" + std::to_string(width) + " RGB image");
    }
    Image img(height, width);
    for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t y = 0; y < height; ++y)
            for (std::size_t x = 0; x < width; ++x) img.at(y, x, c) = chw[(c * height + y) * width + x];
    return img;
}

std::vector<float> image_to_chw(const Image& image) {
    std::vector<float> chw(image.rgb.size());
    for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t y = 0; y < image.height; ++y)
            for (std::size_t x = 0; x < image.width; ++x)
                chw[(c * image.height + y) * image.width + x] = image.at(y, x, c);
    return chw;
}

std::vector<Image> images_from_batch(const Tensor<float>& batch) {
    if (batch.rank() != 4 || batch.dim(1) != 3) {
        throw DimensionError("images_from_batch: expected [N,3,H,W], got " + shape_string(batch.shape()));
    }
    const std::size_t n = batch.dim(0), h = batch.dim(2), w = batch.dim(3);
    std::vector<Image> images;
    images.reserve(n);
    for (std::size_t i = 0; i < n; ++i) images.push_back(image_from_chw(batch.data().subspan(i * 3 * h * w, 3 * h * w), h, w));
    return images;
}

std::uint8_t quantize_channel(float v) {
    return static_cast<std::uint8_t>(std::lround(static_cast<double>(v) * 255.0));
}

std::vector<std::uint8_t> encode_ppm(const Image& image) {
    if (image.rgb.size() != image.height * image.width * 3) {
        throw DimensionError("encode_ppm: pixel buffer does not match " + std::to_string(image.width) + "x" +
                             std::to_string(image.height));
    }
    for (std::size_t i = 0; i < image.rgb.size(); ++i) {
        const float v = image.rgb[i];
        if (!(v >= 0.0f && v <= 1.0f)) {
            throw ContractError("encode_ppm: value " + std::to_string(v) + " at channel index " +
                                std::to_string(i) + " outside [0,1]");
        }
    }
    const std::string header =
        "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
    std::vector<std::uint8_t> bytes(header.begin(), header.end());
    bytes.reserve(header.size() + image.rgb.size());
    for (float v : image.rgb) bytes.push_back(quantize_channel(v));
    return bytes;
}

namespace {

class HeaderReader {
public:
    HeaderReader(std::span<const std::uint8_t> bytes, const std::string& source)
        : bytes_(bytes), source_(source) {}

    [[noreturn]] void fail(const std::string& what) const {
        throw IoError(source_ + ": malformed PPM header (" + what + ")");
    }

    void skip_space_and_comments() {
        while (pos_ < bytes_.size()) {
            const char c = static_cast<char>(bytes_[pos_]);
            if (c == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
            } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f') {
                ++pos_;
            } else {
                break;
            }
        }
    }

    std::size_t number(const char* what) {
        skip_space_and_comments();
        std::size_t value = 0;
        std::size_t digits = 0;
        while (pos_ < bytes_.size() && bytes_[pos_] >= '0' && bytes_[pos_] <= '9') {
            value = value * 10 + static_cast<std::size_t>(bytes_[pos_] - '0');
            if (++digits > 9) fail(std::string(what) + " too large");
            ++pos_;
        }
        if (digits == 0) fail(std::string("missing ") + what);
        return value;
    }

    std::size_t& pos() { return pos_; }
    std::span<const std::uint8_t> bytes() const { return bytes_; }

private:
    std::span<const std::uint8_t> bytes_;
    const std::string& source_;
    std::size_t pos_ = 0;
};

}  // namespace

Image decode_ppm(std::span<const std::uint8_t> bytes, const std::string& source) {
    HeaderReader reader(bytes, source);
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') reader.fail("magic is not P6");
    reader.pos() = 2;
    const std::size_t width = reader.number("width");
    const std::size_t height = reader.number("height");
    const std::size_t maxval = reader.number("maxval");
    if (width == 0 || height == 0) reader.fail("zero image dimension");
    if (maxval != 255) throw IoError(source + ": unsupported maxval " + std::to_string(maxval) + " (need 255)");
    auto& pos = reader.pos();
    if (pos >= bytes.size()) reader.fail("no whitespace after maxval");
    const char sep = static_cast<char>(bytes[pos]);
    if (!(sep == ' ' || sep == '\t' || sep == '\n' || sep == '\r')) reader.fail("no whitespace after maxval");
    ++pos;
    const std::size_t expected = width * height * 3;
    if (bytes.size() - pos != expected) {
        throw IoError(source + ": pixel data holds " + std::to_string(bytes.size() - pos) + " bytes, expected " +
                      std::to_string(expected));
    }
    Image img(height, width);
    for (std::size_t i = 0; i < expected; ++i) img.rgb[i] = static_cast<float>(bytes[pos + i]) / 255.0f;
    return img;
}

void write_ppm(const std::filesystem::path& path, const Image& image) {
    const auto bytes = encode_ppm(image);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing " + path.string());
}

Image read_ppm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_ppm(bytes, path.string());
}

Image compose_panel(const std::vector<Image>& images, std::size_t rows, std::size_t cols, std::size_t pad) {
    if (rows * cols < images.size()) {
        throw ContractError("compose_panel: " + std::to_string(rows) + "x" + std::to_string(cols) +
                            " grid cannot hold " + std::to_string(images.size()) + " images");
    }
    if (images.empty()) throw ContractError("compose_panel: no images");
    const std::size_t h = images.front().height, w = images.front().width;
    for (const auto& img : images)
        if (img.height != h || img.width != w) throw DimensionError("compose_panel: images differ in size");
    Image panel(rows * h + (rows + 1) * pad, cols * w + (cols + 1) * pad, 1.0f);
    for (std::size_t k = 0; k < images.size(); ++k) {
        const std::size_t oy = pad + (k / cols) * (h + pad), ox = pad + (k % cols) * (w + pad);
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x)
                for (std::size_t c = 0; c < 3; ++c) panel.at(oy + y, ox + x, c) = images[k].at(y, x, c);
    }
    return panel;
}

void write_panel(const std::filesystem::path& path, const std::vector<Image>& images, std::size_t rows,
                 std::size_t cols, std::size_t pad) {
    write_ppm(path, compose_panel(images, rows, cols, pad));
}

}  // namespace faae
