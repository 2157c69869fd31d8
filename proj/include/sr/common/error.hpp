// Copyright 2026 The Sticker Recommendation Authors.
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

#pragma once

#include <stdexcept>
#include <string>

namespace sr {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration or argument values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed binary asset, checkpoint or text file.
class FormatError : public Error {
 public:
  enum class Code { kBadMagic, kBadVersion, kTruncated, kShapeMismatch, kCorrupt };

  FormatError(Code code, const std::string& what) : Error(what), code_(code) {}

  Code code() const { return code_; }

 private:
  Code code_;
};

}  // namespace sr
