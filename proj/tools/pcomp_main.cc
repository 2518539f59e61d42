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

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "pcomp/base.h"
#include "pcomp/codec.h"
#include "pcomp/gaussian.h"
#include "pcomp/ingest.h"
#include "pcomp/kernels.h"
#include "pcomp/quantize.h"
#include "pcomp/range_coder.h"
#include "pcomp/rng.h"
#include "pcomp/train.h"
#include "pcomp/util.h"

namespace fs = std::filesystem;
using namespace pcomp;

namespace {

int g_workers = 1;

// Runs fn(i) for i in [0, n) on the configured number of worker threads;
// the first exception wins and is rethrown after all workers drain.
void ForEachIndex(size_t n, const std::function<void(size_t)>& fn) {
  const int workers = std::min<size_t>(g_workers, n);
  if (workers <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      for (size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

std::string DefaultOutput(const std::string& input, const std::string& ext) {
  return (fs::path(input).parent_path() / fs::path(input).stem()).string() +
         ext;
}

struct EncodeArgs {
  std::vector<std::string> inputs;
  std::string model;
  std::string out;
};

void RunEncode(const EncodeArgs& a) {
  const Model model = Model::Load(a.model);
  const bool multi = a.inputs.size() > 1;
  if (multi && !a.out.empty()) fs::create_directories(a.out);
  std::mutex print_mu;
  ForEachIndex(a.inputs.size(), [&](size_t i) {
    const std::string& input = a.inputs[i];
    const Image img = LoadImage(input);
    EncodeStats stats;
    const std::vector<uint8_t> bytes = EncodeImage(model, img, &stats);
    std::string out;
    if (a.out.empty()) {
      out = DefaultOutput(input, ".pcbs");
    } else if (multi) {
      out = (fs::path(a.out) / (fs::path(input).stem().string() + ".pcbs"))
                .string();
    } else {
      out = a.out;
    }
    WriteFile(out, bytes.data(), bytes.size());
    const double bpp = 8.0 * static_cast<double>(stats.payload_bytes) /
                       (static_cast<double>(img.width) * img.height);
    std::lock_guard<std::mutex> lock(print_mu);
    std::printf("%s -> %s: %zu payload bytes, %.4f bpp, %.1f bits estimated\n",
                input.c_str(), out.c_str(),
                static_cast<size_t>(stats.payload_bytes), bpp,
                stats.rate_estimate_bits);
  });
}

struct DecodeArgs {
  std::string input;
  std::string model;
  std::string out;
  double alpha = 0.0;
  int count = 1;
  uint64_t seed = 0;
  std::string prefix;  // sample mode
  bool sample_mode = false;
};

void RunDecode(const DecodeArgs& a) {
  const Model model = Model::Load(a.model);
  SampleSpec spec;
  spec.alpha = a.alpha;
  spec.count = a.sample_mode ? a.count : 1;
  spec.seed = a.seed;
  const std::vector<Image> images =
      DecodeContainer(model, ReadFile(a.input), spec);
  if (!a.sample_mode) {
    const std::string out =
        a.out.empty() ? DefaultOutput(a.input, ".png") : a.out;
    SavePng(out, images[0]);
    std::printf("%s -> %s\n", a.input.c_str(), out.c_str());
    return;
  }
  const std::string prefix =
      a.prefix.empty() ? DefaultOutput(a.input, "") : a.prefix;
  for (size_t i = 0; i < images.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "_s%03zu.png", i);
    SavePng(prefix + name, images[i]);
    std::printf("%s -> %s%s (alpha=%g seed=%llu)\n", a.input.c_str(),
                prefix.c_str(), name, a.alpha,
                static_cast<unsigned long long>(a.seed));
  }
}

struct TrainArgs {
  TrainConfig cfg;
  int levels = 4;
  int window = 5;
  uint64_t init_seed = 0;
  bool have_warm = false;
};

void RunTrain(TrainArgs& a) {
  if (!a.have_warm) a.cfg.warm_steps = a.cfg.total_steps / 5;
  Model model;
  if (a.cfg.resume) {
    model = Model::Load(a.cfg.out_model);
  } else {
    const uint64_t init = a.init_seed != 0 ? a.init_seed : a.cfg.seed;
    model = Model::Create(a.levels, a.window, init);
  }
  TrainModel(model, a.cfg, [](const StepStats& s) {
    if (s.step % 25 == 0) {
      std::printf("step %d: loss %.5f nll %.5f mse %.5f bpp_est %.4f\n",
                  s.step, s.loss, s.nll, s.reg_mse, s.bpp_est);
      std::fflush(stdout);
    }
  });
  std::printf("trained model written to %s\n", a.cfg.out_model.c_str());
}

struct MetricsArgs {
  std::string reference;
  std::vector<std::string> candidates;
  std::string container;
};

void RunMetrics(const MetricsArgs& a) {
  const Image ref = LoadImage(a.reference);
  for (const std::string& path : a.candidates) {
    const ImageMetrics m = CompareImages(ref, LoadImage(path));
    if (std::isinf(m.psnr)) {
      std::printf("%s: mse 0, psnr inf\n", path.c_str());
    } else {
      std::printf("%s: mse %.6f, psnr %.4f dB\n", path.c_str(), m.mse,
                  m.psnr);
    }
  }
  if (!a.container.empty()) {
    const ContainerHeader h = InspectContainer(ReadFile(a.container));
    std::printf("bpp %.6f\n", h.Bpp());
  }
}

struct InspectArgs {
  std::string container;
  std::string model;
  std::string dump_prefix;
};

// Display gain for scale-field dumps; posterior scales are well under 1, so
// amplification is needed to use the 8-bit range.
constexpr double kScaleDumpGain = 7.0;

void RunInspect(const InspectArgs& a) {
  PCOMP_CHECK(a.model.empty() ? a.dump_prefix.empty() : true,
              ErrorKind::kUsage, "--dump-scales needs --model");
  const std::vector<uint8_t> bytes = ReadFile(a.container);
  const ContainerHeader h = InspectContainer(bytes);
  std::printf("container %s\n", a.container.c_str());
  std::printf("  version      %u\n", h.version);
  std::printf("  dimensions   %ux%u, %u channel(s)\n", h.width, h.height,
              h.channels);
  std::printf("  levels       %u\n", h.levels);
  std::printf("  fingerprint  %s\n",
              HexString(h.fingerprint.data(), h.fingerprint.size()).c_str());
  std::printf("  payload      %llu bytes (%.6f bpp)\n",
              static_cast<unsigned long long>(h.payload_bytes), h.Bpp());
  std::printf("  checksum     ok\n");
  if (a.model.empty()) return;

  const Model m = Model::Load(a.model);
  double sum = 0.0;
  int64_t count = 0;
  for (const ScalePlane& p : PosteriorScalePlanes(m, bytes)) {
    double band_sum = 0.0;
    for (double v : p.scale.v) band_sum += v;
    sum += band_sum;
    count += p.scale.Size();
    std::printf("  scale c%d L%d %-2s  %3dx%-3d  mean %.4f\n", p.channel,
                p.band.level, OrientationName(p.band.orientation),
                p.scale.shape[0], p.scale.shape[1],
                band_sum / static_cast<double>(p.scale.Size()));
    if (a.dump_prefix.empty()) continue;
    Image img;
    img.height = p.scale.shape[0];
    img.width = p.scale.shape[1];
    img.channels = 1;
    img.data.resize(p.scale.v.size());
    for (size_t i = 0; i < p.scale.v.size(); ++i) {
      img.data[i] = QuantizePixel(kScaleDumpGain * p.scale.v[i]);
    }
    char name[64];
    std::snprintf(name, sizeof(name), "_c%d_L%d_%s.pgm", p.channel,
                  p.band.level, OrientationName(p.band.orientation));
    SavePnm(a.dump_prefix + name, img);
  }
  std::printf("  mean scale   %.6f\n",
              sum / static_cast<double>(count));
}

void RunSelftest() {
  // Classical transform round trip.
  {
    Tensor plane = Tensor::Zeros({32, 32});
    for (int64_t i = 0; i < plane.Size(); ++i) {
      plane.v[i] = 255.0 * UniformFromKey(StreamKey(11, i));
    }
    const Tensor back = Cdf97Inverse(Cdf97Forward(plane, 3));
    double worst = 0.0;
    for (int64_t i = 0; i < plane.Size(); ++i) {
      worst = std::max(worst, std::abs(back.v[i] - plane.v[i]));
    }
    PCOMP_CHECK(worst <= 1e-9, ErrorKind::kContract,
                "classical transform round trip drifted");
    std::printf("selftest: classical transform round trip ok (%.3g)\n",
                worst);
  }
  // Fresh model transform round trip.
  const Model model = Model::Create(3, 5, 7);
  {
    Tensor plane = Tensor::Zeros({32, 32});
    for (int64_t i = 0; i < plane.Size(); ++i) {
      plane.v[i] = 255.0 * UniformFromKey(StreamKey(13, i));
    }
    const Tensor back =
        InverseTransformEager(model.lift, ForwardTransformEager(model.lift,
                                                                plane, 3));
    double worst = 0.0;
    for (int64_t i = 0; i < plane.Size(); ++i) {
      worst = std::max(worst, std::abs(back.v[i] - plane.v[i]));
    }
    PCOMP_CHECK(worst <= 1e-9, ErrorKind::kContract,
                "learned transform round trip drifted");
    std::printf("selftest: learned transform round trip ok (%.3g)\n", worst);
  }
  // Range coder round trip under random mixtures.
  {
    RangeEncoder enc;
    std::vector<int> symbols;
    std::vector<CodedCdf> cdfs;
    for (int i = 0; i < 50; ++i) {
      double raw[9];
      for (int j = 0; j < 9; ++j) {
        raw[j] = 4.0 * (UniformFromKey(StreamKey(17, 9 * i + j)) - 0.5);
      }
      const MixtureParams mix = MixtureFromRaw(raw);
      const SymbolWindow win = CodingWindow(mix);
      std::vector<double> probs;
      BuildCodingDistribution(mix, win, &probs);
      cdfs.push_back(CodedCdf::FromProbs(probs));
      symbols.push_back(static_cast<int>(
          UniformFromKey(StreamKey(19, i)) * cdfs.back().NumSymbols()));
      enc.Encode(cdfs.back(), symbols.back());
    }
    const std::vector<uint8_t> coded = enc.Finish();
    RangeDecoder dec(coded.data(), coded.size());
    for (int i = 0; i < 50; ++i) {
      PCOMP_CHECK(dec.Decode(cdfs[i]) == symbols[i], ErrorKind::kContract,
                  "range coder round trip mismatch");
    }
    std::printf("selftest: range coder round trip ok (%zu bytes)\n",
                coded.size());
  }
  // Mixture cell masses sum to one over the full alphabet.
  {
    for (int i = 0; i < 5; ++i) {
      double raw[9];
      for (int j = 0; j < 9; ++j) {
        raw[j] = 3.0 * (UniformFromKey(StreamKey(23, 9 * i + j)) - 0.5);
      }
      const MixtureParams mix = MixtureFromRaw(raw);
      double total = 0.0;
      for (int v = kSymbolMin; v <= kSymbolMax; ++v) {
        total += CoeffProbabilityUnfloored(static_cast<double>(v), mix);
      }
      PCOMP_CHECK(std::abs(total - 1.0) <= 1e-6, ErrorKind::kContract,
                  "mixture cell masses do not sum to one");
    }
    std::printf("selftest: mixture normalization ok\n");
  }
  // Deterministic encode/decode agreement on a synthetic image.
  {
    const Image img = SyntheticImage(3, 2, 48);
    const std::vector<uint8_t> c1 = EncodeImage(model, img);
    const std::vector<uint8_t> c2 = EncodeImage(model, img);
    PCOMP_CHECK(c1 == c2, ErrorKind::kContract,
                "encoding is not deterministic");
    const std::vector<Pyramid> sent = EncodePyramids(model, img);
    const std::vector<Pyramid> got = DecodePyramids(model, c1, nullptr);
    PCOMP_CHECK(sent.size() == got.size(), ErrorKind::kContract,
                "channel count mismatch");
    for (size_t c = 0; c < sent.size(); ++c) {
      for (size_t b = 0; b < sent[c].bands.size(); ++b) {
        PCOMP_CHECK(sent[c].bands[b].v == got[c].bands[b].v,
                    ErrorKind::kContract,
                    "decoded coefficients differ from encoded");
      }
    }
    std::printf("selftest: coefficient transport ok (%zu bytes)\n",
                c1.size());
  }
  std::printf("selftest passed\n");
}

}  // namespace

int main(int argc, char** argv) {
  if (const char* env = std::getenv("PCOMP_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) {
      kernels::SetThreads(n);
      g_workers = n;
    }
  }

  CLI::App app{"Probabilistic lossy image codec"};
  app.require_subcommand(1);

  EncodeArgs enc_args;
  CLI::App* enc = app.add_subcommand("encode", "Encode images to containers");
  enc->add_option("images", enc_args.inputs, "Input images")->required();
  enc->add_option("--model", enc_args.model, "Model file")->required();
  enc->add_option("--out", enc_args.out,
                  "Output file (single input) or directory");

  DecodeArgs dec_args;
  CLI::App* dec =
      app.add_subcommand("decode", "Deterministic decode (alpha = 0)");
  dec->add_option("container", dec_args.input, "Coded container")->required();
  dec->add_option("--model", dec_args.model, "Model file")->required();
  dec->add_option("--out", dec_args.out, "Output PNG");

  DecodeArgs samp_args;
  samp_args.sample_mode = true;
  samp_args.alpha = 1.0;
  CLI::App* samp = app.add_subcommand(
      "sample", "Draw reconstructions from one container");
  samp->add_option("container", samp_args.input, "Coded container")
      ->required();
  samp->add_option("--model", samp_args.model, "Model file")->required();
  samp->add_option("--alpha", samp_args.alpha, "Posterior scale multiplier");
  samp->add_option("--count", samp_args.count, "Number of reconstructions")
      ->check(CLI::PositiveNumber);
  samp->add_option("--seed", samp_args.seed, "Sampling seed");
  samp->add_option("--out-prefix", samp_args.prefix, "Output name prefix");

  TrainArgs train_args;
  CLI::App* train = app.add_subcommand("train", "Train a model");
  train->add_option("--lambda", train_args.cfg.lambda, "Rate weight");
  train->add_option("--steps", train_args.cfg.total_steps, "Total steps");
  train->add_option("--batch", train_args.cfg.batch, "Patches per step");
  train->add_option("--patch", train_args.cfg.patch, "Patch side length");
  train->add_option("--data-dir", train_args.cfg.data_dir, "Training PNGs")
      ->required();
  train->add_option("--out-model", train_args.cfg.out_model, "Model output")
      ->required();
  train->add_option("--seed", train_args.cfg.seed, "Training seed");
  train->add_flag("--resume", train_args.cfg.resume,
                  "Continue from the saved model and optimizer state");
  train->add_option("--warm-steps", train_args.cfg.warm_steps,
                    "Steps with the transform frozen (default steps/5)");
  train->add_option("--lr", train_args.cfg.lr, "Adam learning rate");
  train->add_option("--checkpoint-every", train_args.cfg.checkpoint_every,
                    "Checkpoint interval");
  train->add_option("--csv", train_args.cfg.csv_path, "Metrics CSV path");
  train->add_option("--levels", train_args.levels, "Pyramid levels");
  train->add_option("--window", train_args.window, "Context window");
  train->add_option("--init-seed", train_args.init_seed,
                    "Weight init seed (default: --seed)");

  MetricsArgs met_args;
  CLI::App* met = app.add_subcommand("metrics", "Compare reconstructions");
  met->add_option("--reference", met_args.reference, "Reference image")
      ->required();
  met->add_option("candidates", met_args.candidates, "Candidate images")
      ->required();
  met->add_option("--container", met_args.container,
                  "Container for bpp accounting");

  InspectArgs insp_args;
  CLI::App* insp = app.add_subcommand("inspect", "Print container header");
  insp->add_option("container", insp_args.container, "Coded container")
      ->required();
  insp->add_option("--model", insp_args.model,
                   "Model file; adds posterior scale statistics");
  insp->add_option("--dump-scales", insp_args.dump_prefix,
                   "Write per-subband scale fields as PGM files with this "
                   "path prefix");

  IngestOptions ing;
  CLI::App* ingest = app.add_subcommand("ingest", "Build a training corpus");
  ingest->add_option("--out-dir", ing.out_dir, "Output directory")
      ->required();
  ingest->add_option("--source-dir", ing.source_dir, "Directory of images");
  ingest->add_option("--url", ing.urls, "Image URLs to fetch");
  ingest->add_option("--synth", ing.synth_count, "Procedural image count");
  ingest->add_option("--size", ing.synth_size, "Procedural image side");
  ingest->add_option("--seed", ing.seed, "Procedural seed");
  ingest->add_option("--multiple", ing.multiple, "Crop dimension multiple");

  CLI::App* self = app.add_subcommand("selftest", "Run built-in checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (enc->parsed()) {
      RunEncode(enc_args);
    } else if (dec->parsed()) {
      RunDecode(dec_args);
    } else if (samp->parsed()) {
      RunDecode(samp_args);
    } else if (train->parsed()) {
      train_args.have_warm = train->count("--warm-steps") > 0;
      RunTrain(train_args);
    } else if (met->parsed()) {
      RunMetrics(met_args);
    } else if (insp->parsed()) {
      RunInspect(insp_args);
    } else if (ingest->parsed()) {
      const IngestReport r = RunIngest(ing);
      std::printf("ingest: wrote %d image(s), skipped %d, manifest %s\n",
                  r.written, r.skipped, r.manifest_path.c_str());
    } else if (self->parsed()) {
      RunSelftest();
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    switch (e.kind()) {
      case ErrorKind::kUsage:
        return 2;
      case ErrorKind::kModelMismatch:
        return 4;
      default:
        return 3;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
