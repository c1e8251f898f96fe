#pragma once
// PNG/JPEG codec boundary (libpng / libjpeg). JPEG encoding is baseline
// sequential with 4:2:0 chroma subsampling; the codec version string goes
// into run metadata because quantization behaviour differs across builds.

#include <cstddef>
#include <string>
#include <vector>

#include "remnet/image.hpp"

namespace remnet::img {

// Dispatches on file signature (PNG or JPEG).
ImageBuffer read_image(const std::string& path);

void write_png(const std::string& path, const ImageBuffer& img);
void write_jpeg(const std::string& path, const ImageBuffer& img, int quality);

std::vector<unsigned char> encode_jpeg(const ImageBuffer& img, int quality);
ImageBuffer decode_jpeg(const unsigned char* data, std::size_t size);

std::string jpeg_codec_version();

}  // namespace remnet::img
