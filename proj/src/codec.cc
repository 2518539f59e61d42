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

#include "pcomp/codec.h"

#include <cmath>
#include <cstring>
#include <limits>
#include <utility>

#include "pcomp/base.h"
#include "pcomp/quantize.h"
#include "pcomp/range_coder.h"
#include "pcomp/sampler.h"
#include "pcomp/util.h"

namespace pcomp {

namespace {

constexpr char kContainerMagic[4] = {'P', 'C', 'B', 'S'};
constexpr size_t kHeaderBytes = 40;
constexpr size_t kCrcBytes = 4;
constexpr int kMaxLevels = 8;

void SetMeta(Parameter* p, int value) {
  p->value.v[0] = static_cast<double>(value);
  p->trainable = false;
}

int GetMeta(const ParamSet& params, const std::string& name) {
  const Parameter* p = params.Require(name);
  PCOMP_CHECK(p->value.Size() == 1, ErrorKind::kData,
              "malformed metadata entry " + name);
  return static_cast<int>(p->value.v[0]);
}

int RoundUpTo(int x, int step) { return (x + step - 1) / step * step; }

Pyramid EmptyPyramid(int levels, int rows, int cols) {
  Pyramid p;
  p.levels = levels;
  p.rows = rows;
  p.cols = cols;
  for (const BandId& id : BandOrder(levels)) {
    int h = 0, w = 0;
    BandShape(rows, cols, id, &h, &w);
    p.bands.push_back(Tensor::Zeros({h, w}));
  }
  return p;
}

CodedCdf BuildCdf(const MixtureParams& mix, const SymbolWindow& win) {
  std::vector<double> probs;
  BuildCodingDistribution(mix, win, &probs);
  return CodedCdf::FromProbs(probs);
}

// One pass over a subband in raster order, shared by the estimator (enc and
// dec both null), the encoder, and the decoder, so all three construct the
// same models from the same partially known band. Returns the estimator's
// cost in bits; for decode the band is filled in place.
double CodeBand(const Model& m, Tensor& band, const Tensor* ref,
                const BandId& id, RangeEncoder* enc, RangeDecoder* dec) {
  const int h = band.shape[0];
  const int w = band.shape[1];
  double bits = 0.0;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const MixtureParams mix =
          PredictMixture(m.context, band, ref, r, c, id);
      const SymbolWindow win = CodingWindow(mix);
      if (dec != nullptr) {
        const CodedCdf cdf = BuildCdf(mix, win);
        const int sym = dec->Decode(cdf);
        const int v = sym == win.Size()
                          ? kSymbolMin + static_cast<int>(dec->DecodeRaw16())
                          : win.lo + sym;
        band.At(r, c) = static_cast<double>(v);
        continue;
      }
      const int v = static_cast<int>(std::llround(band.At(r, c)));
      bits += SymbolCostBits(v, mix, win);
      if (enc != nullptr) {
        const CodedCdf cdf = BuildCdf(mix, win);
        if (win.Contains(v)) {
          enc->Encode(cdf, v - win.lo);
        } else {
          enc->Encode(cdf, win.Size());
          enc->EncodeRaw16(static_cast<uint16_t>(v - kSymbolMin));
        }
      }
    }
  }
  return bits;
}

struct ChannelCode {
  double bits = 0.0;
  // ll_ref[k] is the reconstructed lowpass plane conditioning level k's
  // subbands (k in 1..levels); built from decoded values only.
  std::vector<Tensor> ll_ref;
};

ChannelCode CodeChannel(const Model& m, Pyramid* pyr, RangeEncoder* enc,
                        RangeDecoder* dec) {
  ChannelCode out;
  out.ll_ref.resize(m.levels + 1);
  for (const BandId& id : BandOrder(m.levels)) {
    Tensor& band = pyr->bands[BandSlot(m.levels, id)];
    if (id.orientation == Orientation::kLL) {
      out.bits += CodeBand(m, band, nullptr, id, enc, dec);
      out.ll_ref[m.levels] = band;
      continue;
    }
    out.bits += CodeBand(m, band, &out.ll_ref[id.level], id, enc, dec);
    if (id.orientation == Orientation::kHH && id.level > 1) {
      out.ll_ref[id.level - 1] = InverseLevelEager(
          m.lift, out.ll_ref[id.level],
          pyr->bands[BandSlot(m.levels, {id.level, Orientation::kHL})],
          pyr->bands[BandSlot(m.levels, {id.level, Orientation::kLH})],
          pyr->bands[BandSlot(m.levels, {id.level, Orientation::kHH})]);
    }
  }
  return out;
}

std::vector<Pyramid> BuildQuantizedPyramids(const Model& m, const Image& img,
                                            int* ph, int* pw) {
  PCOMP_CHECK(img.width >= 1 && img.height >= 1 &&
                  (img.channels == 1 || img.channels == 3),
              ErrorKind::kInvalidShape, "empty or malformed image");
  const int step = 1 << m.levels;
  *ph = RoundUpTo(img.height, step);
  *pw = RoundUpTo(img.width, step);
  std::vector<Pyramid> qpyrs;
  for (int c = 0; c < img.channels; ++c) {
    const Tensor plane = PadPlane(ChannelPlane(img, c), *ph, *pw);
    qpyrs.push_back(QuantizeHard(ForwardTransformEager(m.lift, plane,
                                                       m.levels)));
  }
  return qpyrs;
}

std::vector<uint8_t> SerializeContainer(const ContainerHeader& h,
                                        const std::vector<uint8_t>& payload) {
  ByteWriter w;
  w.Bytes(kContainerMagic, 4);
  w.U16(h.version);
  w.U32(h.width);
  w.U32(h.height);
  w.U8(h.channels);
  w.U8(h.levels);
  w.Bytes(h.fingerprint.data(), h.fingerprint.size());
  w.U64(payload.size());
  w.Bytes(payload.data(), payload.size());
  w.U32(Crc32(payload.data(), payload.size()));
  return w.Take();
}

// Structural parse: magic, version, field sanity, length. No CRC or
// fingerprint verdict here; callers sequence those.
ContainerHeader ParseHeader(const std::vector<uint8_t>& container) {
  PCOMP_CHECK(container.size() >= kHeaderBytes + kCrcBytes, ErrorKind::kData,
              "container too short");
  ByteReader r(container);
  char magic[4];
  r.Bytes(magic, 4);
  PCOMP_CHECK(std::memcmp(magic, kContainerMagic, 4) == 0, ErrorKind::kData,
              "not a coded container");
  ContainerHeader h;
  h.version = r.U16();
  PCOMP_CHECK(h.version == kContainerVersion, ErrorKind::kData,
              "unsupported container version");
  h.width = r.U32();
  h.height = r.U32();
  h.channels = r.U8();
  h.levels = r.U8();
  r.Bytes(h.fingerprint.data(), h.fingerprint.size());
  h.payload_bytes = r.U64();
  PCOMP_CHECK(h.width >= 1 && h.height >= 1, ErrorKind::kData,
              "container has empty dimensions");
  PCOMP_CHECK(h.channels == 1 || h.channels == 3, ErrorKind::kData,
              "container has unsupported channel count");
  PCOMP_CHECK(h.levels >= 1 && h.levels <= kMaxLevels, ErrorKind::kData,
              "container has unsupported level count");
  PCOMP_CHECK(h.payload_bytes == container.size() - kHeaderBytes - kCrcBytes,
              ErrorKind::kData, "container payload length mismatch");
  return h;
}

void CheckCrc(const std::vector<uint8_t>& container,
              const ContainerHeader& h) {
  ByteReader r(container.data() + kHeaderBytes + h.payload_bytes, kCrcBytes);
  const uint32_t stored = r.U32();
  const uint32_t actual =
      Crc32(container.data() + kHeaderBytes, h.payload_bytes);
  PCOMP_CHECK(stored == actual, ErrorKind::kData,
              "container checksum mismatch");
}

struct DecodedStream {
  ContainerHeader header;
  int ph = 0, pw = 0;
  std::vector<Pyramid> qpyrs;
  std::vector<ChannelCode> chains;
};

DecodedStream DecodeCore(const Model& m,
                         const std::vector<uint8_t>& container) {
  DecodedStream s;
  s.header = ParseHeader(container);
  PCOMP_CHECK(s.header.fingerprint == m.Fingerprint(),
              ErrorKind::kModelMismatch,
              "bitstream was written by a different model");
  PCOMP_CHECK(s.header.levels == m.levels, ErrorKind::kModelMismatch,
              "bitstream level count differs from model");
  CheckCrc(container, s.header);

  const int step = 1 << m.levels;
  s.ph = RoundUpTo(static_cast<int>(s.header.height), step);
  s.pw = RoundUpTo(static_cast<int>(s.header.width), step);
  RangeDecoder dec(container.data() + kHeaderBytes, s.header.payload_bytes);
  for (int c = 0; c < s.header.channels; ++c) {
    s.qpyrs.push_back(EmptyPyramid(m.levels, s.ph, s.pw));
    s.chains.push_back(CodeChannel(m, &s.qpyrs.back(), nullptr, &dec));
  }
  return s;
}

// Posterior mean/scale fields for every subband of one channel.
void PosteriorFields(const Model& m, const Pyramid& qpyr,
                     const ChannelCode& chain, std::vector<Tensor>* mus,
                     std::vector<Tensor>* ss) {
  mus->clear();
  ss->clear();
  for (const BandId& id : BandOrder(m.levels)) {
    const int slot = BandSlot(m.levels, id);
    const Tensor* ref = id.orientation == Orientation::kLL
                            ? nullptr
                            : &chain.ll_ref[id.level];
    Tensor mu, sc;
    m.posterior.ApplyEager(qpyr.bands[slot], ref, id, &mu, &sc);
    mus->push_back(std::move(mu));
    ss->push_back(std::move(sc));
  }
}

}  // namespace

Model Model::Create(int levels, int context_window, uint64_t init_seed) {
  PCOMP_CHECK(levels >= 1 && levels <= kMaxLevels, ErrorKind::kContract,
              "levels out of range");
  Model m;
  m.levels = levels;
  m.context_window = context_window;
  SetMeta(m.params.Create("meta.levels", {1}), levels);
  SetMeta(m.params.Create("meta.window", {1}), context_window);
  m.lift = LiftingStage::Create(m.params, "lift");
  m.posterior = PosteriorModel::Create(m.params, levels);
  m.context = ContextModel::Create(m.params, context_window);
  InitRng rng(init_seed);
  m.lift.Init(rng);
  m.posterior.Init(rng);
  m.context.Init(rng);
  return m;
}

Model Model::Load(const std::string& path) {
  ParamSet ps = DeserializeParams(ReadFile(path));
  const int levels = GetMeta(ps, "meta.levels");
  const int window = GetMeta(ps, "meta.window");
  PCOMP_CHECK(levels >= 1 && levels <= kMaxLevels, ErrorKind::kData,
              "model file has unsupported level count");
  Model m;
  m.levels = levels;
  m.context_window = window;
  m.params = std::move(ps);
  m.lift = LiftingStage::Attach(m.params, "lift");
  m.posterior = PosteriorModel::Attach(m.params, levels);
  m.context = ContextModel::Attach(m.params, window);
  return m;
}

void Model::Save(const std::string& path) const {
  const std::vector<uint8_t> bytes = SerializeParams(params);
  WriteFile(path, bytes.data(), bytes.size());
}

std::array<uint8_t, 16> Model::Fingerprint() const {
  const std::vector<uint8_t> bytes = SerializeParams(params);
  return Digest128(bytes.data(), bytes.size());
}

double ContainerHeader::Bpp() const {
  return 8.0 * static_cast<double>(payload_bytes) /
         (static_cast<double>(width) * static_cast<double>(height));
}

std::vector<uint8_t> EncodeImage(const Model& m, const Image& img,
                                 EncodeStats* stats) {
  int ph = 0, pw = 0;
  std::vector<Pyramid> qpyrs = BuildQuantizedPyramids(m, img, &ph, &pw);
  RangeEncoder enc;
  double bits = 0.0;
  for (Pyramid& q : qpyrs) bits += CodeChannel(m, &q, &enc, nullptr).bits;
  const std::vector<uint8_t> payload = enc.Finish();

  ContainerHeader h;
  h.width = static_cast<uint32_t>(img.width);
  h.height = static_cast<uint32_t>(img.height);
  h.channels = static_cast<uint8_t>(img.channels);
  h.levels = static_cast<uint8_t>(m.levels);
  h.fingerprint = m.Fingerprint();
  h.payload_bytes = payload.size();
  if (stats != nullptr) {
    stats->rate_estimate_bits = bits;
    stats->payload_bytes = payload.size();
  }
  return SerializeContainer(h, payload);
}

double RateEstimateBits(const Model& m, const Image& img) {
  int ph = 0, pw = 0;
  std::vector<Pyramid> qpyrs = BuildQuantizedPyramids(m, img, &ph, &pw);
  double bits = 0.0;
  for (Pyramid& q : qpyrs) bits += CodeChannel(m, &q, nullptr, nullptr).bits;
  return bits;
}

std::vector<Image> DecodeContainer(const Model& m,
                                   const std::vector<uint8_t>& container,
                                   const SampleSpec& spec) {
  PCOMP_CHECK(spec.count >= 1, ErrorKind::kContract,
              "sample count must be positive");
  PCOMP_CHECK(spec.alpha >= 0.0, ErrorKind::kContract,
              "variance scale must be non-negative");
  DecodedStream s = DecodeCore(m, container);

  const int channels = s.header.channels;
  std::vector<std::vector<Tensor>> mus(channels), ss(channels);
  for (int c = 0; c < channels; ++c) {
    PosteriorFields(m, s.qpyrs[c], s.chains[c], &mus[c], &ss[c]);
  }

  std::vector<Image> images;
  for (int i = 0; i < spec.count; ++i) {
    const uint64_t seed = DrawSeed(spec.seed, static_cast<uint64_t>(i));
    uint64_t cursor = 0;
    std::vector<Tensor> planes;
    for (int c = 0; c < channels; ++c) {
      Pyramid sampled = s.qpyrs[c];
      for (size_t b = 0; b < sampled.bands.size(); ++b) {
        sampled.bands[b] =
            SampleField(mus[c][b], ss[c][b], spec.alpha, seed, &cursor);
      }
      Tensor plane = InverseTransformEager(m.lift, sampled);
      planes.push_back(CropPlane(plane, static_cast<int>(s.header.height),
                                 static_cast<int>(s.header.width)));
    }
    images.push_back(ImageFromPlanes(planes));
  }
  return images;
}

ContainerHeader InspectContainer(const std::vector<uint8_t>& container) {
  const ContainerHeader h = ParseHeader(container);
  CheckCrc(container, h);
  return h;
}

std::vector<Pyramid> EncodePyramids(const Model& m, const Image& img) {
  int ph = 0, pw = 0;
  return BuildQuantizedPyramids(m, img, &ph, &pw);
}

std::vector<Pyramid> DecodePyramids(const Model& m,
                                    const std::vector<uint8_t>& container,
                                    ContainerHeader* header) {
  DecodedStream s = DecodeCore(m, container);
  if (header != nullptr) *header = s.header;
  return std::move(s.qpyrs);
}

double MeanPosteriorScale(const Model& m,
                          const std::vector<uint8_t>& container) {
  DecodedStream s = DecodeCore(m, container);
  double sum = 0.0;
  int64_t count = 0;
  for (int c = 0; c < s.header.channels; ++c) {
    std::vector<Tensor> mus, ss;
    PosteriorFields(m, s.qpyrs[c], s.chains[c], &mus, &ss);
    for (const Tensor& t : ss) {
      for (double v : t.v) sum += v;
      count += t.Size();
    }
  }
  return sum / static_cast<double>(count);
}

std::vector<ScalePlane> PosteriorScalePlanes(
    const Model& m, const std::vector<uint8_t>& container) {
  DecodedStream s = DecodeCore(m, container);
  const std::vector<BandId> order = BandOrder(m.levels);
  std::vector<ScalePlane> planes;
  for (int c = 0; c < s.header.channels; ++c) {
    std::vector<Tensor> mus, ss;
    PosteriorFields(m, s.qpyrs[c], s.chains[c], &mus, &ss);
    for (size_t i = 0; i < order.size(); ++i) {
      planes.push_back({c, order[i], std::move(ss[i])});
    }
  }
  return planes;
}

ImageMetrics CompareImages(const Image& ref, const Image& cand) {
  PCOMP_CHECK(ref.width == cand.width && ref.height == cand.height &&
                  ref.channels == cand.channels,
              ErrorKind::kInvalidShape, "image dimensions differ");
  double sse = 0.0;
  for (size_t i = 0; i < ref.data.size(); ++i) {
    const double d = static_cast<double>(ref.data[i]) -
                     static_cast<double>(cand.data[i]);
    sse += d * d;
  }
  ImageMetrics out;
  out.mse = sse / static_cast<double>(ref.data.size());
  out.psnr = out.mse == 0.0
                 ? std::numeric_limits<double>::infinity()
                 : 10.0 * std::log10(255.0 * 255.0 / out.mse);
  return out;
}

}  // namespace pcomp
