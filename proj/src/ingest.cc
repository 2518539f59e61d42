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

#include "pcomp/ingest.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>

#include "httplib.h"
#include "json.hpp"
#include "pcomp/base.h"
#include "pcomp/rng.h"
#include "pcomp/util.h"

namespace pcomp {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr double kPi = 3.14159265358979323846;

std::string SanitizeStem(const std::string& stem) {
  std::string out;
  for (char c : stem) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '-' || c == '_';
    out.push_back(ok ? c : '_');
  }
  return out.empty() ? std::string("image") : out;
}

bool HasImageExtension(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".pgm" || ext == ".ppm";
}

// scheme://host[:port]/path
bool FetchUrl(const std::string& url, std::vector<uint8_t>* body,
              std::string* err) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    *err = "malformed URL";
    return false;
  }
  const std::string scheme = url.substr(0, scheme_end);
  const auto path_start = url.find('/', scheme_end + 3);
  const std::string hostport = url.substr(
      scheme_end + 3,
      (path_start == std::string::npos ? url.size() : path_start) -
          scheme_end - 3);
  const std::string path =
      path_start == std::string::npos ? "/" : url.substr(path_start);
  if (hostport.empty()) {
    *err = "malformed URL";
    return false;
  }

  httplib::Result res;
  if (scheme == "http") {
    httplib::Client cli(("http://" + hostport).c_str());
    cli.set_follow_location(true);
    res = cli.Get(path.c_str());
  } else if (scheme == "https") {
#ifdef CPPHTTPLIB_OPENSSL_SUPPORT
    httplib::Client cli(("https://" + hostport).c_str());
    cli.set_follow_location(true);
    res = cli.Get(path.c_str());
#else
    *err = "https support not built";
    return false;
#endif
  } else {
    *err = "unsupported URL scheme " + scheme;
    return false;
  }
  if (!res) {
    *err = "request failed: " + httplib::to_string(res.error());
    return false;
  }
  if (res->status != 200) {
    *err = "HTTP status " + std::to_string(res->status);
    return false;
  }
  body->assign(res->body.begin(), res->body.end());
  return true;
}

}  // namespace

Image SyntheticImage(uint64_t seed, int index, int size) {
  PCOMP_CHECK(size >= 1, ErrorKind::kContract, "synthetic size must be >= 1");
  const uint64_t key = StreamKey(seed, static_cast<uint64_t>(index));
  auto u = [key](uint64_t j) { return UniformFromKey(StreamKey(key, j)); };

  std::vector<double> plane(static_cast<size_t>(size) * size, 0.0);
  auto at = [&plane, size](int y, int x) -> double& {
    return plane[static_cast<size_t>(y) * size + x];
  };

  switch (index % 4) {
    case 0: {  // oriented smooth gradient
      const double theta = u(0) * 2.0 * kPi;
      const double base = 40.0 + u(1) * 100.0;
      const double span = 60.0 + u(2) * 140.0;
      for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
          const double t =
              (std::cos(theta) * x + std::sin(theta) * y) / size + 0.5;
          at(y, x) = base + span * t;
        }
      }
      break;
    }
    case 1: {  // superposed gratings
      for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) at(y, x) = 128.0;
      }
      for (int g = 0; g < 3; ++g) {
        const double fx = 1.0 + std::floor(u(10 * g) * 8.0);
        const double fy = 1.0 + std::floor(u(10 * g + 1) * 8.0);
        const double phase = u(10 * g + 2) * 2.0 * kPi;
        const double amp = 15.0 + u(10 * g + 3) * 30.0;
        for (int y = 0; y < size; ++y) {
          for (int x = 0; x < size; ++x) {
            at(y, x) += amp * std::sin(2.0 * kPi * (fx * x + fy * y) / size +
                                       phase);
          }
        }
      }
      break;
    }
    case 2: {  // Gaussian blobs
      const double base = 60.0 + u(0) * 80.0;
      for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) at(y, x) = base;
      }
      for (int b = 0; b < 6; ++b) {
        const double cx = u(8 * b + 1) * size;
        const double cy = u(8 * b + 2) * size;
        const double sigma = size * (0.04 + 0.12 * u(8 * b + 3));
        const double amp =
            (u(8 * b + 4) < 0.5 ? -1.0 : 1.0) * (40.0 + u(8 * b + 5) * 80.0);
        for (int y = 0; y < size; ++y) {
          for (int x = 0; x < size; ++x) {
            const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
            at(y, x) += amp * std::exp(-d2 / (2.0 * sigma * sigma));
          }
        }
      }
      break;
    }
    default: {  // noisy rectangles
      const double base = 50.0 + u(0) * 150.0;
      for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) at(y, x) = base;
      }
      for (int rct = 0; rct < 8; ++rct) {
        const int x0 = static_cast<int>(u(16 * rct + 1) * size);
        const int y0 = static_cast<int>(u(16 * rct + 2) * size);
        const int rw = 1 + static_cast<int>(u(16 * rct + 3) * size * 0.5);
        const int rh = 1 + static_cast<int>(u(16 * rct + 4) * size * 0.5);
        const double v = 30.0 + u(16 * rct + 5) * 190.0;
        for (int y = y0; y < std::min(size, y0 + rh); ++y) {
          for (int x = x0; x < std::min(size, x0 + rw); ++x) at(y, x) = v;
        }
      }
      const uint64_t noise_key = StreamKey(key, 0xA11CE);
      for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
          at(y, x) += 12.0 * CenteredUniform(noise_key,
                                             static_cast<uint64_t>(y) * size +
                                                 x);
        }
      }
      break;
    }
  }

  Image img;
  img.width = size;
  img.height = size;
  img.channels = 1;
  img.data.resize(plane.size());
  for (size_t i = 0; i < plane.size(); ++i) {
    img.data[i] = QuantizePixel(plane[i]);
  }
  return img;
}

std::vector<std::string> ListImageFiles(const std::string& dir) {
  PCOMP_CHECK(fs::is_directory(dir), ErrorKind::kIo,
              "not a directory: " + dir);
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && HasImageExtension(entry.path())) {
      files.push_back(entry.path().string());
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

IngestReport RunIngest(const IngestOptions& opt) {
  PCOMP_CHECK(!opt.out_dir.empty(), ErrorKind::kUsage,
              "ingest needs an output directory");
  PCOMP_CHECK(opt.multiple >= 1, ErrorKind::kUsage,
              "crop multiple must be positive");
  fs::create_directories(opt.out_dir);

  json images = json::array();
  json skipped = json::array();
  std::set<std::string> used_names;

  auto add_image = [&](const Image& img, const std::string& stem,
                       const std::string& source) {
    const int cw = img.width / opt.multiple * opt.multiple;
    const int ch = img.height / opt.multiple * opt.multiple;
    if (cw == 0 || ch == 0) {
      std::fprintf(stderr, "warning: %s: smaller than crop multiple %d\n",
                   source.c_str(), opt.multiple);
      skipped.push_back({{"source", source},
                         {"reason", "smaller than crop multiple"}});
      return;
    }
    Image cropped;
    cropped.width = cw;
    cropped.height = ch;
    cropped.channels = img.channels;
    cropped.data.resize(static_cast<size_t>(cw) * ch * img.channels);
    const int x0 = (img.width - cw) / 2;
    const int y0 = (img.height - ch) / 2;
    for (int y = 0; y < ch; ++y) {
      for (int x = 0; x < cw; ++x) {
        for (int c = 0; c < img.channels; ++c) {
          cropped.data[(static_cast<size_t>(y) * cw + x) * img.channels + c] =
              img.At(y0 + y, x0 + x, c);
        }
      }
    }
    std::string name = stem;
    for (int n = 2; used_names.count(name + ".png") != 0; ++n) {
      name = stem + "_" + std::to_string(n);
    }
    name += ".png";
    used_names.insert(name);
    const std::string path = (fs::path(opt.out_dir) / name).string();
    SavePng(path, cropped);
    const std::vector<uint8_t> bytes = ReadFile(path);
    images.push_back({{"file", name},
                      {"width", cw},
                      {"height", ch},
                      {"channels", img.channels},
                      {"crc32", Crc32(bytes.data(), bytes.size())},
                      {"source", source}});
  };

  char stem[32];
  for (int i = 0; i < opt.synth_count; ++i) {
    std::snprintf(stem, sizeof(stem), "synth_%04d", i);
    add_image(SyntheticImage(opt.seed, i, opt.synth_size), stem, "synthetic");
  }

  if (!opt.source_dir.empty()) {
    for (const std::string& path : ListImageFiles(opt.source_dir)) {
      try {
        add_image(LoadImage(path),
                  SanitizeStem(fs::path(path).stem().string()), path);
      } catch (const Error& e) {
        std::fprintf(stderr, "warning: %s: %s\n", path.c_str(), e.what());
        skipped.push_back({{"source", path}, {"reason", e.what()}});
      }
    }
  }

  for (const std::string& url : opt.urls) {
    std::vector<uint8_t> body;
    std::string err;
    if (!FetchUrl(url, &body, &err)) {
      std::fprintf(stderr, "warning: %s: %s\n", url.c_str(), err.c_str());
      skipped.push_back({{"source", url}, {"reason", err}});
      continue;
    }
    const std::string tmp =
        (fs::path(opt.out_dir) / ".download.tmp").string();
    WriteFile(tmp, body.data(), body.size());
    try {
      fs::path as_path(url);
      add_image(LoadImage(tmp), SanitizeStem(as_path.stem().string()), url);
    } catch (const Error& e) {
      std::fprintf(stderr, "warning: %s: %s\n", url.c_str(), e.what());
      skipped.push_back({{"source", url}, {"reason", e.what()}});
    }
    fs::remove(tmp);
  }

  json manifest = {{"seed", opt.seed},
                   {"multiple", opt.multiple},
                   {"images", images},
                   {"skipped", skipped}};
  const std::string manifest_path =
      (fs::path(opt.out_dir) / "manifest.json").string();
  const std::string text = manifest.dump(2) + "\n";
  WriteFile(manifest_path, text.data(), text.size());

  IngestReport report;
  report.written = static_cast<int>(images.size());
  report.skipped = static_cast<int>(skipped.size());
  report.manifest_path = manifest_path;
  return report;
}

}  // namespace pcomp
