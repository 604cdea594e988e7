#pragma once

#include <filesystem>

#include "melanet/image.hpp"

namespace melanet {

// Decodes PNG or JPEG into raw_0_255 RGB (or single-channel) pixels.
// Throws DataError on missing or undecodable files.
ImageTensor decode_image(const std::filesystem::path& path);

// Writes a lossless PNG. Expects raw_0_255; values are clamped and rounded.
void encode_png(const ImageTensor& image, const std::filesystem::path& path);

// raw_0_255 quantization helper shared by PNG writers.
ImageTensor quantize_to_raw(const ImageTensor& image);

}  // namespace melanet
