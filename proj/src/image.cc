// Copyright 2026 The pcomp Authors. All Rights Reserved.
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

#include "pcomp/image.h"

#include <png.h>

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>

#include "pcomp/base.h"
#include "pcomp/util.h"

namespace pcomp {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f != nullptr) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

Image LoadPng(const std::string& path) {
  FilePtr f(std::fopen(path.c_str(), "rb"));
  PCOMP_CHECK(f != nullptr, ErrorKind::kIo, "cannot open " + path);
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  PCOMP_CHECK(png != nullptr, ErrorKind::kIo, "png reader allocation failed");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    Fail(ErrorKind::kIo, "png reader allocation failed");
  }

  Image img;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    Fail(ErrorKind::kData, "corrupt PNG: " + path);
  }

  png_init_io(png, f.get());
  png_read_info(png, info);

  // Normalize everything to 8-bit gray or RGB.
  png_set_strip_16(png);
  png_set_packing(png);
  const png_byte color = png_get_color_type(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY &&
      png_get_bit_depth(png, info) < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
  }
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);
  if (png_get_color_type(png, info) & PNG_COLOR_MASK_ALPHA) {
    png_set_strip_alpha(png);
    png_read_update_info(png, info);
  }

  img.width = static_cast<int>(png_get_image_width(png, info));
  img.height = static_cast<int>(png_get_image_height(png, info));
  img.channels = static_cast<int>(png_get_channels(png, info));
  if (img.channels != 1 && img.channels != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    Fail(ErrorKind::kData, "unsupported PNG channel layout in " + path);
  }
  img.data.resize(static_cast<size_t>(img.width) * img.height * img.channels);
  rows.resize(img.height);
  for (int y = 0; y < img.height; ++y) {
    rows[y] = img.data.data() +
              static_cast<size_t>(y) * img.width * img.channels;
  }
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

// Binary PGM (P5) / PPM (P6) with 8-bit samples.
Image LoadPnm(const std::vector<uint8_t>& bytes, const std::string& path) {
  size_t pos = 0;
  auto next_token = [&bytes, &pos, &path]() -> std::string {
    while (pos < bytes.size()) {
      const char ch = static_cast<char>(bytes[pos]);
      if (ch == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(ch))) {
        ++pos;
      } else {
        break;
      }
    }
    const size_t start = pos;
    while (pos < bytes.size() &&
           !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
      ++pos;
    }
    PCOMP_CHECK(pos > start, ErrorKind::kData, "truncated PNM header: " + path);
    return std::string(bytes.begin() + start, bytes.begin() + pos);
  };

  const std::string magic = next_token();
  PCOMP_CHECK(magic == "P5" || magic == "P6", ErrorKind::kData,
              "unsupported image format: " + path);
  Image img;
  img.channels = magic == "P5" ? 1 : 3;
  try {
    img.width = std::stoi(next_token());
    img.height = std::stoi(next_token());
    const int maxval = std::stoi(next_token());
    PCOMP_CHECK(maxval == 255, ErrorKind::kData,
                "only 8-bit PNM supported: " + path);
  } catch (const Error&) {
    throw;
  } catch (const std::exception&) {
    Fail(ErrorKind::kData, "malformed PNM header: " + path);
  }
  PCOMP_CHECK(img.width > 0 && img.height > 0, ErrorKind::kData,
              "bad PNM dimensions: " + path);
  ++pos;  // single whitespace after maxval
  const size_t need =
      static_cast<size_t>(img.width) * img.height * img.channels;
  PCOMP_CHECK(bytes.size() - pos >= need, ErrorKind::kData,
              "truncated PNM data: " + path);
  img.data.assign(bytes.begin() + pos, bytes.begin() + pos + need);
  return img;
}

int FoldIndex(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

}  // namespace

Image LoadImage(const std::string& path) {
  const std::vector<uint8_t> head = ReadFile(path);
  PCOMP_CHECK(head.size() >= 8, ErrorKind::kData, "not an image: " + path);
  if (png_sig_cmp(head.data(), 0, 8) == 0) return LoadPng(path);
  return LoadPnm(head, path);
}

void SavePng(const std::string& path, const Image& img) {
  PCOMP_CHECK(img.channels == 1 || img.channels == 3, ErrorKind::kContract,
              "image must have 1 or 3 channels");
  FilePtr f(std::fopen(path.c_str(), "wb"));
  PCOMP_CHECK(f != nullptr, ErrorKind::kIo, "cannot write " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                            nullptr, nullptr);
  PCOMP_CHECK(png != nullptr, ErrorKind::kIo, "png writer allocation failed");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    Fail(ErrorKind::kIo, "png writer allocation failed");
  }
  std::vector<png_bytep> rows(img.height);
  for (int y = 0; y < img.height; ++y) {
    rows[y] = const_cast<png_bytep>(
        img.data.data() + static_cast<size_t>(y) * img.width * img.channels);
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    Fail(ErrorKind::kIo, "PNG write failed: " + path);
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, img.width, img.height, 8,
               img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void SavePnm(const std::string& path, const Image& img) {
  PCOMP_CHECK(img.channels == 1 || img.channels == 3, ErrorKind::kContract,
              "image must have 1 or 3 channels");
  ByteWriter w;
  w.Str(img.channels == 1 ? "P5\n" : "P6\n");
  w.Str(std::to_string(img.width) + " " + std::to_string(img.height) +
        "\n255\n");
  w.Bytes(img.data.data(), img.data.size());
  WriteFile(path, w.data().data(), w.size());
}

Tensor ChannelPlane(const Image& img, int channel) {
  PCOMP_CHECK(channel >= 0 && channel < img.channels, ErrorKind::kContract,
              "channel out of range");
  Tensor t = Tensor::Zeros({img.height, img.width});
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      t.At(y, x) = static_cast<double>(img.At(y, x, channel));
    }
  }
  return t;
}

Tensor LumaPlane(const Image& img) {
  if (img.channels == 1) return ChannelPlane(img, 0);
  Tensor t = Tensor::Zeros({img.height, img.width});
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      t.At(y, x) = 0.299 * img.At(y, x, 0) + 0.587 * img.At(y, x, 1) +
                   0.114 * img.At(y, x, 2);
    }
  }
  return t;
}

uint8_t QuantizePixel(double v) {
  const double r = std::round(v);
  if (r <= 0.0) return 0;
  if (r >= 255.0) return 255;
  return static_cast<uint8_t>(r);
}

Image ImageFromPlanes(const std::vector<Tensor>& planes) {
  PCOMP_CHECK(planes.size() == 1 || planes.size() == 3, ErrorKind::kContract,
              "need 1 or 3 planes");
  const int h = planes[0].shape[0];
  const int w = planes[0].shape[1];
  for (const Tensor& p : planes) {
    PCOMP_CHECK(p.Rank() == 2 && p.shape[0] == h && p.shape[1] == w,
                ErrorKind::kInvalidShape, "plane shapes differ");
  }
  Image img;
  img.width = w;
  img.height = h;
  img.channels = static_cast<int>(planes.size());
  img.data.resize(static_cast<size_t>(w) * h * img.channels);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < img.channels; ++c) {
        img.data[(static_cast<size_t>(y) * w + x) * img.channels + c] =
            QuantizePixel(planes[c].At(y, x));
      }
    }
  }
  return img;
}

Tensor PadPlane(const Tensor& plane, int h, int w) {
  PCOMP_CHECK(plane.Rank() == 2, ErrorKind::kInvalidShape,
              "plane must be rank-2");
  PCOMP_CHECK(h >= plane.shape[0] && w >= plane.shape[1],
              ErrorKind::kInvalidShape, "pad target smaller than plane");
  if (h == plane.shape[0] && w == plane.shape[1]) return plane;
  Tensor out = Tensor::Zeros({h, w});
  for (int y = 0; y < h; ++y) {
    const int sy = FoldIndex(y, plane.shape[0]);
    for (int x = 0; x < w; ++x) {
      out.At(y, x) = plane.At(sy, FoldIndex(x, plane.shape[1]));
    }
  }
  return out;
}

Tensor CropPlane(const Tensor& plane, int h, int w) {
  PCOMP_CHECK(plane.Rank() == 2 && h <= plane.shape[0] && w <= plane.shape[1],
              ErrorKind::kInvalidShape, "crop larger than plane");
  if (h == plane.shape[0] && w == plane.shape[1]) return plane;
  Tensor out = Tensor::Zeros({h, w});
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) out.At(y, x) = plane.At(y, x);
  }
  return out;
}

}  // namespace pcomp
