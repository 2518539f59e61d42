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

#ifndef PCOMP_INGEST_H_
#define PCOMP_INGEST_H_

#include <cstdint>
#include <string>
#include <vector>

#include "pcomp/image.h"

namespace pcomp {

// Builds a normalized training directory: 8-bit PNGs with dimensions
// center-cropped to multiples of `multiple`, plus a manifest.json recording
// per-file checksums and every skipped source. Sources can be a directory of
// images, a list of http(s) URLs, and/or `synth_count` procedural images
// generated deterministically from `seed`.
struct IngestOptions {
  std::string out_dir;
  std::string source_dir;
  std::vector<std::string> urls;
  int synth_count = 0;
  int synth_size = 96;
  uint64_t seed = 1;
  int multiple = 16;
};

struct IngestReport {
  int written = 0;
  int skipped = 0;
  std::string manifest_path;
};

IngestReport RunIngest(const IngestOptions& opt);

// Deterministic procedural image: smooth gradients, gratings, Gaussian
// blobs, or noisy rectangles, cycling by index.
Image SyntheticImage(uint64_t seed, int index, int size);

// Sorted .png/.pgm/.ppm paths directly inside dir.
std::vector<std::string> ListImageFiles(const std::string& dir);

}  // namespace pcomp

#endif  // PCOMP_INGEST_H_
