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

#ifndef PCOMP_IMAGE_H_
#define PCOMP_IMAGE_H_

#include <cstdint>
#include <string>
#include <vector>

#include "pcomp/tensor.h"

namespace pcomp {

// 8-bit image, channels interleaved.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 0;  // 1 or 3
  std::vector<uint8_t> data;

  uint8_t At(int y, int x, int c) const {
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }
};

// PNG (any bit depth or palette normalizes to 8-bit gray or RGB) or binary
// PGM/PPM by content sniffing. Corrupt or unsupported files throw kData /
// kIo.
Image LoadImage(const std::string& path);

void SavePng(const std::string& path, const Image& img);
void SavePnm(const std::string& path, const Image& img);  // P5 / P6

// One channel as a {height, width} tensor of doubles on the 0..255 scale.
Tensor ChannelPlane(const Image& img, int channel);
// Luma plane (ITU BT.601 weights) for color images; the single channel for
// grayscale.
Tensor LumaPlane(const Image& img);

// Clamps to [0, 255] and rounds half away from zero.
uint8_t QuantizePixel(double v);
// Reassembles an image from per-channel planes.
Image ImageFromPlanes(const std::vector<Tensor>& planes);

// Mirror-pads a plane on the bottom/right to the given size.
Tensor PadPlane(const Tensor& plane, int h, int w);
Tensor CropPlane(const Tensor& plane, int h, int w);

}  // namespace pcomp

#endif  // PCOMP_IMAGE_H_
