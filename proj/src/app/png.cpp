#include "gzipt/app/png.hpp"

#include <algorithm>
#include <fstream>

#include <zlib.h>

#include "gzipt/common/error.hpp"

namespace gzipt::app {
namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

void put_chunk(std::vector<std::uint8_t>& out, const char type[4], const std::vector<std::uint8_t>& data) {
  put_u32(out, static_cast<std::uint32_t>(data.size()));
  const std::size_t start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  const auto crc = crc32(0L, out.data() + start, static_cast<uInt>(out.size() - start));
  put_u32(out, static_cast<std::uint32_t>(crc));
}

}  // namespace

void Image::fill_rect(std::size_t x0, std::size_t y0, std::size_t w, std::size_t h, Rgb c) {
  const std::size_t x1 = std::min(width, x0 + w), y1 = std::min(height, y0 + h);
  for (std::size_t y = y0; y < y1; ++y)
    for (std::size_t x = x0; x < x1; ++x) at(x, y) = c;
}

std::vector<std::uint8_t> encode_png(const Image& img, const std::map<std::string, std::string>& text) {
  require(img.width > 0 && img.height > 0 && img.pixels.size() == img.width * img.height, "png: bad image size");
  std::vector<std::uint8_t> out = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

  std::vector<std::uint8_t> ihdr;
  put_u32(ihdr, static_cast<std::uint32_t>(img.width));
  put_u32(ihdr, static_cast<std::uint32_t>(img.height));
  ihdr.insert(ihdr.end(), {8, 2, 0, 0, 0});  // 8-bit RGB, no interlace
  put_chunk(out, "IHDR", ihdr);

  for (const auto& [key, value] : text) {
    require(!key.empty() && key.size() < 80, "png: text key must be 1..79 bytes");
    std::vector<std::uint8_t> chunk(key.begin(), key.end());
    chunk.push_back(0);
    chunk.insert(chunk.end(), value.begin(), value.end());
    put_chunk(out, "tEXt", chunk);
  }

  std::vector<std::uint8_t> raw;
  raw.reserve(img.height * (1 + 3 * img.width));
  for (std::size_t y = 0; y < img.height; ++y) {
    raw.push_back(0);
    for (std::size_t x = 0; x < img.width; ++x) {
      const Rgb& p = img.at(x, y);
      raw.insert(raw.end(), {p.r, p.g, p.b});
    }
  }
  uLongf packed_size = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> packed(packed_size);
  const int rc = compress2(packed.data(), &packed_size, raw.data(), static_cast<uLong>(raw.size()), 9);
  require(rc == Z_OK, "png: zlib compression failed");
  packed.resize(packed_size);
  put_chunk(out, "IDAT", packed);
  put_chunk(out, "IEND", {});
  return out;
}

void write_png(const std::filesystem::path& path, const Image& img, const std::map<std::string, std::string>& text) {
  const auto bytes = encode_png(img, text);
  std::ofstream f(path, std::ios::binary);
  require(f.good(), "cannot write " + path.string());
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  require(f.good(), "write failed: " + path.string());
}

}  // namespace gzipt::app
