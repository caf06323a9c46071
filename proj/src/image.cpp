#include "kreg/image.hpp"

#include <fstream>

#include "kreg/errors.hpp"

namespace kreg {

namespace {

struct PnmHeader {
  std::string magic;
  int width = 0;
  int height = 0;
  int maxval = 0;
  int header_lines = 0;
};

// Netpbm token scanner: whitespace separates tokens, '#' starts a comment
// that runs to end of line.
PnmHeader read_header(std::istream& in, const std::string& path) {
  PnmHeader h;
  int line = 1;
  auto next_token = [&]() -> std::string {
    std::string tok;
    int ch;
    while ((ch = in.get()) != EOF) {
      if (ch == '#') {
        while ((ch = in.get()) != EOF && ch != '\n') {
        }
        if (ch == '\n') ++line;
        continue;
      }
      if (ch == '\n') {
        ++line;
        continue;
      }
      if (ch == ' ' || ch == '\t' || ch == '\r') continue;
      tok.push_back(static_cast<char>(ch));
      while ((ch = in.get()) != EOF && !isspace(ch)) tok.push_back(static_cast<char>(ch));
      if (ch == '\n') ++line;
      return tok;
    }
    throw ParseError(path, line, "unexpected end of header");
  };
  h.magic = next_token();
  try {
    h.width = std::stoi(next_token());
    h.height = std::stoi(next_token());
    h.maxval = std::stoi(next_token());
  } catch (const std::exception&) {
    throw ParseError(path, line, "malformed header field");
  }
  if (h.width <= 0 || h.height <= 0 || h.maxval <= 0) {
    throw ParseError(path, line, "non-positive image dimensions");
  }
  h.header_lines = line;
  return h;
}

}  // namespace

ImageU16 read_pgm16(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  const PnmHeader h = read_header(in, path);
  if (h.magic != "P5" && h.magic != "P2") {
    throw ParseError(path, 1, "expected PGM magic P5 or P2, got '" + h.magic + "'");
  }
  ImageU16 img(h.width, h.height, 1);
  const size_t n = img.data.size();
  if (h.magic == "P2") {
    for (size_t i = 0; i < n; ++i) {
      long v;
      if (!(in >> v)) throw ParseError(path, h.header_lines, "truncated ascii pixel data");
      img.data[i] = static_cast<uint16_t>(v);
    }
  } else if (h.maxval > 255) {
    std::vector<uint8_t> raw(n * 2);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<size_t>(in.gcount()) != raw.size()) {
      throw ParseError(path, h.header_lines, "truncated binary pixel data");
    }
    for (size_t i = 0; i < n; ++i) {
      img.data[i] = static_cast<uint16_t>((raw[2 * i] << 8) | raw[2 * i + 1]);  // big-endian
    }
  } else {
    std::vector<uint8_t> raw(n);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<size_t>(in.gcount()) != raw.size()) {
      throw ParseError(path, h.header_lines, "truncated binary pixel data");
    }
    for (size_t i = 0; i < n; ++i) img.data[i] = raw[i];
  }
  return img;
}

void write_pgm16(const ImageU16& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "P5\n" << img.width << " " << img.height << "\n65535\n";
  std::vector<uint8_t> raw(img.data.size() * 2);
  for (size_t i = 0; i < img.data.size(); ++i) {
    raw[2 * i] = static_cast<uint8_t>(img.data[i] >> 8);
    raw[2 * i + 1] = static_cast<uint8_t>(img.data[i] & 0xFF);
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
}

ImageU8 read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  const PnmHeader h = read_header(in, path);
  if (h.magic != "P6" && h.magic != "P3") {
    throw ParseError(path, 1, "expected PPM magic P6 or P3, got '" + h.magic + "'");
  }
  if (h.maxval != 255) throw ParseError(path, 1, "only 8-bit PPM supported");
  ImageU8 img(h.width, h.height, 3);
  if (h.magic == "P3") {
    for (size_t i = 0; i < img.data.size(); ++i) {
      int v;
      if (!(in >> v)) throw ParseError(path, h.header_lines, "truncated ascii pixel data");
      img.data[i] = static_cast<uint8_t>(v);
    }
  } else {
    in.read(reinterpret_cast<char*>(img.data.data()),
            static_cast<std::streamsize>(img.data.size()));
    if (static_cast<size_t>(in.gcount()) != img.data.size()) {
      throw ParseError(path, h.header_lines, "truncated binary pixel data");
    }
  }
  return img;
}

void write_ppm(const ImageU8& img, const std::string& path) {
  if (img.channels != 3) throw std::invalid_argument("write_ppm: need 3 channels");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "P6\n" << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.data.data()),
            static_cast<std::streamsize>(img.data.size()));
}

ImageU8 to_gray(const ImageU8& img) {
  if (img.channels == 1) return img;
  ImageU8 gray(img.width, img.height, 1);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const int v =
          (299 * img.at(x, y, 0) + 587 * img.at(x, y, 1) + 114 * img.at(x, y, 2)) / 1000;
      gray.at(x, y) = static_cast<uint8_t>(v);
    }
  }
  return gray;
}

}  // namespace kreg
