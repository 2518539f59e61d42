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

#ifndef PCOMP_CODEC_H_
#define PCOMP_CODEC_H_

#include <array>
#include <cstdint>
#include <vector>

#include "pcomp/image.h"
#include "pcomp/model.h"

namespace pcomp {

// Bitstream container: a fixed 40-byte header, the range-coded payload, and
// a trailing CRC32 of the payload. All integers little-endian.
inline constexpr uint16_t kContainerVersion = 1;

struct ContainerHeader {
  uint16_t version = kContainerVersion;
  uint32_t width = 0;
  uint32_t height = 0;
  uint8_t channels = 0;
  uint8_t levels = 0;
  std::array<uint8_t, 16> fingerprint{};
  uint64_t payload_bytes = 0;

  double Bpp() const;  // payload bits per pixel
};

struct EncodeStats {
  double rate_estimate_bits = 0.0;
  uint64_t payload_bytes = 0;
};

std::vector<uint8_t> EncodeImage(const Model& m, const Image& img,
                                 EncodeStats* stats = nullptr);

// Context-model cost of the image's quantized pyramid in bits; the coder
// achieves this up to integer-CDF slack plus a constant flush tail.
double RateEstimateBits(const Model& m, const Image& img);

struct SampleSpec {
  double alpha = 0.0;
  int count = 1;
  uint64_t seed = 0;
};

// Validates the container (magic/version and field sanity, then model
// fingerprint, then payload CRC), entropy-decodes the coefficient pyramids
// once, and emits `count` reconstructions sampled from the posterior field.
std::vector<Image> DecodeContainer(const Model& m,
                                   const std::vector<uint8_t>& container,
                                   const SampleSpec& spec);

// Header parse + CRC verification without entropy decoding (no model needed).
ContainerHeader InspectContainer(const std::vector<uint8_t>& container);

// Test and inspection hooks: the quantized pyramids as the encoder computed
// them, and as the decoder recovered them.
std::vector<Pyramid> EncodePyramids(const Model& m, const Image& img);
std::vector<Pyramid> DecodePyramids(const Model& m,
                                    const std::vector<uint8_t>& container,
                                    ContainerHeader* header);

// Mean posterior scale over every coefficient of the container's decode.
double MeanPosteriorScale(const Model& m,
                          const std::vector<uint8_t>& container);

// Posterior scale field of one subband of a decoded container.
struct ScalePlane {
  int channel = 0;
  BandId band;
  Tensor scale;  // {band height, band width}
};

// Scale planes for every channel, in subband coding order per channel.
std::vector<ScalePlane> PosteriorScalePlanes(
    const Model& m, const std::vector<uint8_t>& container);

struct ImageMetrics {
  double mse = 0.0;
  double psnr = 0.0;  // +infinity when mse == 0
};
ImageMetrics CompareImages(const Image& ref, const Image& cand);

}  // namespace pcomp

#endif  // PCOMP_CODEC_H_
