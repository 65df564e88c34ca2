// include/dotn/error.h

// Copyright 2026  The dotn Authors

// See ../../LICENSE for clarification regarding multiple authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef DOTN_ERROR_H_
#define DOTN_ERROR_H_

#include <stdexcept>
#include <string>

namespace dotn {

enum class ErrorKind {
  kShape,
  kMarginal,
  kCoupling,
  kState,
  kArgument,
  kConfig,
  kIo,
};

// Name used in categorized error lines, e.g. "shape" or "config".
const char *ErrorKindName(ErrorKind kind);

/// All library failures are reported through this exception; kind() tells
/// the caller which contract was violated.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string &what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void ThrowShapeError(const std::string &msg) {
  throw Error(ErrorKind::kShape, msg);
}
[[noreturn]] inline void ThrowArgumentError(const std::string &msg) {
  throw Error(ErrorKind::kArgument, msg);
}
[[noreturn]] inline void ThrowConfigError(const std::string &msg) {
  throw Error(ErrorKind::kConfig, msg);
}

}  // namespace dotn

#endif  // DOTN_ERROR_H_
