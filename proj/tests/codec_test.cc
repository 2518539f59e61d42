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

#include <cmath>
#include <cstdint>
#include <vector>

#include "doctest.h"
#include "pcomp/base.h"
#include "pcomp/codec.h"
#include "pcomp/gaussian.h"
#include "pcomp/image.h"
#include "pcomp/lifting.h"
#include "pcomp/model.h"
#include "pcomp/rng.h"
#include "test_util.h"

namespace pcomp {
namespace {

constexpr size_t kOverheadBytes = 44;  // 40 header + 4 payload CRC

Image SmoothImage(int w, int h, int channels, uint64_t key) {
  // Smooth gradients plus mild noise keep coded values small and realistic.
  Image img;
  img.width = w;
  img.height = h;
  img.channels = channels;
  img.data.resize(static_cast<size_t>(w) * h * channels);
  size_t i = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < channels; ++c) {
        const double base =
            120.0 + 60.0 * std::sin(0.21 * x + 0.4 * c) +
            50.0 * std::cos(0.17 * y - 0.3 * c);
        const double noise =
            12.0 * (UniformFromKey(StreamKey(key, i)) - 0.5);
        img.data[i++] = QuantizePixel(base + noise);
      }
    }
  }
  return img;
}

void CheckErrorKind(const std::vector<uint8_t>& container, const Model& m,
                    ErrorKind want) {
  try {
    DecodeContainer(m, container, SampleSpec{});
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.kind() == want);
  }
}

TEST_CASE("quantized pyramids survive the bitstream exactly") {
  const Model m = Model::Create(2, 5, 11);
  struct Case {
    int w, h, ch;
  };
  for (const Case& tc : std::initializer_list<Case>{
           {32, 32, 1}, {16, 16, 3}, {17, 23, 1}, {31, 16, 1}, {45, 37, 3}}) {
    const Image img = SmoothImage(tc.w, tc.h, tc.ch, 9000 + tc.w);
    const std::vector<Pyramid> sent = EncodePyramids(m, img);
    const std::vector<uint8_t> bytes = EncodeImage(m, img);

    ContainerHeader header;
    const std::vector<Pyramid> got = DecodePyramids(m, bytes, &header);
    CHECK(header.width == static_cast<uint32_t>(tc.w));
    CHECK(header.height == static_cast<uint32_t>(tc.h));
    CHECK(header.channels == tc.ch);
    CHECK(header.levels == 2);

    REQUIRE(got.size() == sent.size());
    for (size_t c = 0; c < got.size(); ++c) {
      REQUIRE(got[c].bands.size() == sent[c].bands.size());
      for (size_t b = 0; b < got[c].bands.size(); ++b) {
        const Tensor& gb = got[c].bands[b];
        const Tensor& sb = sent[c].bands[b];
        REQUIRE(gb.shape == sb.shape);
        for (int64_t i = 0; i < gb.Size(); ++i) {
          CHECK(gb.v[i] == sb.v[i]);
        }
      }
    }
  }
}

TEST_CASE("encoding is deterministic and the overhead is fixed") {
  const Model m = Model::Create(2, 5, 12);
  const Image img = SmoothImage(24, 20, 1, 9100);
  EncodeStats stats;
  const std::vector<uint8_t> a = EncodeImage(m, img, &stats);
  const std::vector<uint8_t> b = EncodeImage(m, img);
  CHECK(a == b);
  CHECK(a.size() == stats.payload_bytes + kOverheadBytes);
  CHECK(stats.rate_estimate_bits == doctest::Approx(RateEstimateBits(m, img)));
  // The coder must land within the usual slack of its own estimate.
  CHECK(8.0 * static_cast<double>(stats.payload_bytes) <=
        stats.rate_estimate_bits * 1.02 + 64.0);
}

TEST_CASE("alpha zero decodes to the posterior mean of the sent pyramid") {
  // At initialization the posterior correction nets are exactly zero, so the
  // mean field equals the decoded coefficients and the reconstruction is the
  // inverse transform of what was coded.
  const Model m = Model::Create(2, 5, 13);
  const Image img = SmoothImage(22, 18, 1, 9200);
  const std::vector<uint8_t> bytes = EncodeImage(m, img);

  const std::vector<Image> out = DecodeContainer(m, bytes, SampleSpec{});
  REQUIRE(out.size() == 1);
  CHECK(out[0].width == 22);
  CHECK(out[0].height == 18);

  ContainerHeader header;
  const std::vector<Pyramid> pyr = DecodePyramids(m, bytes, &header);
  const Tensor plane = InverseTransformEager(m.lift, pyr[0]);
  const Tensor cropped = CropPlane(plane, 18, 22);
  const Image want = ImageFromPlanes({cropped});
  CHECK(out[0].data == want.data);
}

TEST_CASE("reconstruction stays close to the input at alpha zero") {
  const Model m = Model::Create(2, 5, 14);
  const Image img = SmoothImage(32, 32, 1, 9300);
  const std::vector<uint8_t> bytes = EncodeImage(m, img);
  const std::vector<Image> out = DecodeContainer(m, bytes, SampleSpec{});
  const ImageMetrics metrics = CompareImages(img, out[0]);
  // Unit quantization of an orthogonal-ish transform: high-PSNR regime.
  CHECK(metrics.psnr > 40.0);
}

TEST_CASE("container rejects every kind of tampering") {
  const Model m = Model::Create(2, 5, 15);
  const Image img = SmoothImage(16, 16, 1, 9400);
  std::vector<uint8_t> bytes = EncodeImage(m, img);

  SUBCASE("payload corruption trips the checksum") {
    bytes[kOverheadBytes - 4 + 7] ^= 0x40;  // one payload byte
    CheckErrorKind(bytes, m, ErrorKind::kData);
  }
  SUBCASE("crc corruption") {
    bytes[bytes.size() - 1] ^= 0x01;
    CheckErrorKind(bytes, m, ErrorKind::kData);
  }
  SUBCASE("bad magic") {
    bytes[0] ^= 0xFF;
    CheckErrorKind(bytes, m, ErrorKind::kData);
  }
  SUBCASE("unsupported version") {
    bytes[4] ^= 0x08;
    CheckErrorKind(bytes, m, ErrorKind::kData);
  }
  SUBCASE("foreign fingerprint") {
    bytes[20] ^= 0x10;
    CheckErrorKind(bytes, m, ErrorKind::kModelMismatch);
  }
  SUBCASE("level count from another configuration") {
    bytes[15] = 3;  // model has 2 levels
    CheckErrorKind(bytes, m, ErrorKind::kModelMismatch);
  }
  SUBCASE("truncation") {
    bytes.resize(bytes.size() - 9);
    CheckErrorKind(bytes, m, ErrorKind::kData);
  }
  SUBCASE("short header") {
    bytes.resize(10);
    CheckErrorKind(bytes, m, ErrorKind::kData);
  }
  SUBCASE("decoding with a different model") {
    const Model other = Model::Create(2, 5, 999);
    CheckErrorKind(bytes, other, ErrorKind::kModelMismatch);
  }
}

TEST_CASE("inspect reads headers without a model") {
  const Model m = Model::Create(3, 5, 16);
  const Image img = SmoothImage(40, 24, 3, 9500);
  EncodeStats stats;
  const std::vector<uint8_t> bytes = EncodeImage(m, img, &stats);
  const ContainerHeader h = InspectContainer(bytes);
  CHECK(h.version == kContainerVersion);
  CHECK(h.width == 40);
  CHECK(h.height == 24);
  CHECK(h.channels == 3);
  CHECK(h.levels == 3);
  CHECK(h.payload_bytes == stats.payload_bytes);
  CHECK(h.Bpp() ==
        doctest::Approx(8.0 * stats.payload_bytes / (40.0 * 24.0)));
  // Container overhead stays within the fixed budget.
  CHECK(bytes.size() - stats.payload_bytes == kOverheadBytes);
  CHECK(kOverheadBytes <= 64);

  std::vector<uint8_t> tampered = bytes;
  tampered[tampered.size() - 2] ^= 0x04;
  CHECK_THROWS_AS(InspectContainer(tampered), Error);
}

TEST_CASE("sampling is deterministic per seed and varies across seeds") {
  const Model m = Model::Create(2, 5, 17);
  const Image img = SmoothImage(24, 24, 1, 9600);
  const std::vector<uint8_t> bytes = EncodeImage(m, img);

  SampleSpec spec;
  spec.alpha = 1.0;
  spec.count = 2;
  spec.seed = 77;
  const std::vector<Image> a = DecodeContainer(m, bytes, spec);
  const std::vector<Image> b = DecodeContainer(m, bytes, spec);
  REQUIRE(a.size() == 2);
  CHECK(a[0].data == b[0].data);
  CHECK(a[1].data == b[1].data);
  CHECK(a[0].data != a[1].data);  // distinct draws from one call

  spec.seed = 78;
  const std::vector<Image> c = DecodeContainer(m, bytes, spec);
  CHECK(c[0].data != a[0].data);

  // Suppressing the noise removes all seed dependence.
  SampleSpec mean;
  mean.alpha = 0.0;
  mean.seed = 123;
  SampleSpec mean2;
  mean2.alpha = 0.0;
  mean2.seed = 456;
  CHECK(DecodeContainer(m, bytes, mean)[0].data ==
        DecodeContainer(m, bytes, mean2)[0].data);
}

TEST_CASE("alpha widens the gap from the mean reconstruction") {
  const Model m = Model::Create(2, 5, 18);
  const Image img = SmoothImage(32, 32, 1, 9700);
  const std::vector<uint8_t> bytes = EncodeImage(m, img);

  SampleSpec mean;
  const Image base = DecodeContainer(m, bytes, mean)[0];

  double prev = 0.0;
  for (double alpha : {0.3, 1.0}) {
    SampleSpec spec;
    spec.alpha = alpha;
    spec.seed = 5;
    const Image s = DecodeContainer(m, bytes, spec)[0];
    const double mse = CompareImages(base, s).mse;
    CHECK(mse > prev);
    prev = mse;
  }
}

TEST_CASE("mean posterior scale at initialization is the softplus floor") {
  const Model m = Model::Create(2, 5, 19);
  const Image img = SmoothImage(16, 16, 1, 9800);
  const std::vector<uint8_t> bytes = EncodeImage(m, img);
  // Zero posterior nets emit softplus(0) + 1e-3 for every coefficient.
  CHECK(MeanPosteriorScale(m, bytes) ==
        doctest::Approx(0.6941471805599453).epsilon(1e-12));
}

TEST_CASE("posterior scale planes cover every subband of every channel") {
  const Model m = Model::Create(2, 5, 21);
  const Image img = SmoothImage(16, 16, 3, 10100);
  const std::vector<uint8_t> bytes = EncodeImage(m, img);
  const std::vector<ScalePlane> planes = PosteriorScalePlanes(m, bytes);

  REQUIRE(planes.size() == 21);  // 3 channels x (3 * 2 + 1) subbands
  double sum = 0.0;
  int64_t count = 0;
  for (size_t i = 0; i < planes.size(); ++i) {
    const ScalePlane& p = planes[i];
    CHECK(p.channel == static_cast<int>(i / 7));
    const int side = p.band.level == 2 ? 4 : 8;
    CHECK(p.scale.shape == std::vector<int>{side, side});
    for (double v : p.scale.v) {
      CHECK(v > 0.0);
      sum += v;
    }
    count += p.scale.Size();
  }
  CHECK(sum / static_cast<double>(count) ==
        doctest::Approx(MeanPosteriorScale(m, bytes)).epsilon(1e-12));
}

TEST_CASE("compare images reports mse and psnr") {
  Image a = SmoothImage(8, 8, 1, 9900);
  Image b = a;
  const ImageMetrics same = CompareImages(a, b);
  CHECK(same.mse == 0.0);
  CHECK(std::isinf(same.psnr));

  // Shift one pixel by 16: mse = 256/64 = 4.
  b.data[5] = static_cast<uint8_t>(b.data[5] + 16);
  const ImageMetrics diff = CompareImages(a, b);
  CHECK(diff.mse == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(diff.psnr ==
        doctest::Approx(48.1308036086791 - 10.0 * std::log10(4.0))
            .epsilon(1e-10));

  Image c = SmoothImage(8, 9, 1, 9901);
  CHECK_THROWS_AS(CompareImages(a, c), Error);
}

TEST_CASE("color images code each channel independently but share the file") {
  const Model m = Model::Create(2, 5, 20);
  const Image img = SmoothImage(20, 16, 3, 10000);
  const std::vector<uint8_t> bytes = EncodeImage(m, img);
  const std::vector<Image> out = DecodeContainer(m, bytes, SampleSpec{});
  CHECK(out[0].channels == 3);
  CHECK(out[0].width == 20);
  const ImageMetrics metrics = CompareImages(img, out[0]);
  CHECK(metrics.psnr > 40.0);
}

}  // namespace
}  // namespace pcomp
