#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace gzipt::app {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<Rgb> pixels;  // row-major

  Image() = default;
  Image(std::size_t w, std::size_t h, Rgb fill = {}) : width(w), height(h), pixels(w * h, fill) {}
  Rgb& at(std::size_t x, std::size_t y) { return pixels[y * width + x]; }
  const Rgb& at(std::size_t x, std::size_t y) const { return pixels[y * width + x]; }
  void fill_rect(std::size_t x0, std::size_t y0, std::size_t w, std::size_t h, Rgb c);
};

// 8-bit RGB PNG with one tEXt chunk per entry of `text`.
std::vector<std::uint8_t> encode_png(const Image& img, const std::map<std::string, std::string>& text = {});
void write_png(const std::filesystem::path& path, const Image& img, const std::map<std::string, std::string>& text = {});

}  // namespace gzipt::app
