#pragma once

// Binary PPM (P6, maxval 255) encoding and panel composition.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "faae/tensor.hpp"

namespace faae {

// Interleaved RGB pixels (height x width x 3), values in [0,1].
struct Image {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<float> rgb;

    Image() = default;
    Image(std::size_t h, std::size_t w, float fill = 0.0f) : height(h), width(w), rgb(h * w * 3, fill) {}

    float& at(std::size_t y, std::size_t x, std::size_t c) { return rgb[(y * width + x) * 3 + c]; }
    float at(std::size_t y, std::size_t x, std::size_t c) const { return rgb[(y * width + x) * 3 + c]; }
    bool operator==(const Image&) const = default;
};

// Conversions between planar [3, H, W] samples and interleaved images.
Image image_from_chw(std::span<const float> chw, std::size_t height, std::size_t width);
std::vector<float> image_to_chw(const Image& image);
// Splits a [N, 3, H, W] tensor into N images.
std::vector<Image> images_from_batch(const Tensor<float>& batch);

// round(v * 255) with halves away from zero.
std::uint8_t quantize_channel(float v);

// "P6\n<w> <h>\n255\n" followed by RGB bytes. Throws ContractError for any
// value outside [0,1] before producing output.
std::vector<std::uint8_t> encode_ppm(const Image& image);
// `source` names the input in error messages.
Image decode_ppm(std::span<const std::uint8_t> bytes, const std::string& source);

void write_ppm(const std::filesystem::path& path, const Image& image);
Image read_ppm(const std::filesystem::path& path);

// Row-major grid of equally sized images separated and framed by `pad`
// white pixels; unused cells stay white.
Image compose_panel(const std::vector<Image>& images, std::size_t rows, std::size_t cols, std::size_t pad);
void write_panel(const std::filesystem::path& path, const std::vector<Image>& images, std::size_t rows,
                 std::size_t cols, std::size_t pad);

}  // namespace faae
