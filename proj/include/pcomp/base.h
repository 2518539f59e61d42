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

#ifndef PCOMP_BASE_H_
#define PCOMP_BASE_H_

#include <cstdint>
#include <stdexcept>
#include <string>

namespace pcomp {

// Failure categories. The CLI maps kUsage to exit code 2, kModelMismatch to
// exit code 4 and everything else to exit code 3.
enum class ErrorKind {
  kUsage,
  kInvalidShape,
  kRangeOverflow,
  kData,
  kIo,
  kModelMismatch,
  kSequencing,
  kContract,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void Fail(ErrorKind kind, const std::string& msg) {
  throw Error(kind, msg);
}

const char* ErrorKindName(ErrorKind kind);

#define PCOMP_CHECK(cond, kind, msg)          \
  do {                                        \
    if (!(cond)) ::pcomp::Fail((kind), (msg)); \
  } while (0)

}  // namespace pcomp

#endif  // PCOMP_BASE_H_
