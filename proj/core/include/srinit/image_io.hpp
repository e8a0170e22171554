// Copyright 2026 The srinit Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SRINIT_IMAGE_IO_HPP_
#define SRINIT_IMAGE_IO_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace srinit {

// 8-bit interleaved RGB raster.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // height * width * 3

  RgbImage() = default;
  RgbImage(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, fill) {}

  std::uint8_t* at(int x, int y) { return pixels.data() + (static_cast<std::size_t>(y) * width + x) * 3; }
  const std::uint8_t* at(int x, int y) const {
    return pixels.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }
};

void write_png(const RgbImage& image, const std::filesystem::path& path);
// Reads 8-bit gray, gray+alpha, RGB or RGBA PNG files (alpha is dropped).
RgbImage read_png(const std::filesystem::path& path);

// Draws upper-case text with a built-in 5x7 bitmap font; lower-case letters
// are rendered as upper-case and unsupported characters as blanks.
void draw_text(RgbImage& image, int x, int y, const std::string& text, int scale,
               std::uint8_t r, std::uint8_t g, std::uint8_t b);
int text_width(const std::string& text, int scale);

}  // namespace srinit

#endif  // SRINIT_IMAGE_IO_HPP_
