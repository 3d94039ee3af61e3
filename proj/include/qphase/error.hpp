// Copyright 2026 The qphase Authors - All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef QPHASE_ERROR_HPP
#define QPHASE_ERROR_HPP

#include <functional>
#include <iostream>
#include <stdexcept>
#include <string>

namespace qphase {

/// Failure categories. The numeric values double as CLI exit codes.
enum class ErrorKind : int {
  usage = 1,
  data = 2,
  convergence = 3,
  postselect = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string &what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string &what) : Error(ErrorKind::usage, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string &what) : Error(ErrorKind::data, what) {}
};

/// Iterative eigensolver gave up; carries the last residual norm.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string &what, double residual)
      : Error(ErrorKind::convergence, what), residual_(residual) {}

  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Ancilla post-selection has zero probability, or a probability curve never
/// crosses one half.
class PostselectError : public Error {
 public:
  explicit PostselectError(const std::string &what)
      : Error(ErrorKind::postselect, what) {}
};

using WarningSink = std::function<void(const std::string &)>;

inline WarningSink &warning_sink() {
  static WarningSink sink = [](const std::string &msg) {
    std::clog << "warning: " << msg << '\n';
  };
  return sink;
}

inline void warn(const std::string &msg) {
  if (warning_sink()) warning_sink()(msg);
}

}  // namespace qphase

#endif  // QPHASE_ERROR_HPP
