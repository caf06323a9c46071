#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace kreg {

/// Dense row-major image, interleaved channels.
template <typename T>
struct Image {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<T> data;

  Image() = default;
  Image(int w, int h, int c) : width(w), height(h), channels(c) {
    data.assign(static_cast<size_t>(w) * h * c, T{});
  }

  T& at(int x, int y, int c = 0) {
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }
  const T& at(int x, int y, int c = 0) const {
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }
  bool empty() const { return data.empty(); }
};

using ImageU8 = Image<uint8_t>;
using ImageU16 = Image<uint16_t>;
using ImageF = Image<float>;

/// PGM (P2/P5, maxval up to 65535, 16-bit samples big-endian per Netpbm).
ImageU16 read_pgm16(const std::string& path);
void write_pgm16(const ImageU16& img, const std::string& path);

/// PPM (P3/P6, 8-bit).
ImageU8 read_ppm(const std::string& path);
void write_ppm(const ImageU8& img, const std::string& path);

/// Integer rec601-style luma from an RGB (or single-channel) image.
ImageU8 to_gray(const ImageU8& img);

}  // namespace kreg
