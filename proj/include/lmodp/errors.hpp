// Copyright 2026 The lmodp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace lmodp {

// Every library error derives from Error so callers (the CLI in particular)
// can map it to an exit code and a machine-readable name.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define LMODP_DEFINE_ERROR(Name)                                   \
  class Name : public Error {                                      \
   public:                                                         \
    explicit Name(const std::string& message) : Error(#Name, message) {} \
  }

LMODP_DEFINE_ERROR(InvalidArgument);
LMODP_DEFINE_ERROR(DomainError);
LMODP_DEFINE_ERROR(InvalidOrder);
LMODP_DEFINE_ERROR(GridMismatch);
LMODP_DEFINE_ERROR(AllInfinite);
LMODP_DEFINE_ERROR(Unachievable);
LMODP_DEFINE_ERROR(NoFeasibleCandidate);
LMODP_DEFINE_ERROR(GridTooLarge);
LMODP_DEFINE_ERROR(IoError);
LMODP_DEFINE_ERROR(SchemaError);
LMODP_DEFINE_ERROR(ValidationError);
LMODP_DEFINE_ERROR(EmptyInput);
LMODP_DEFINE_ERROR(InvalidQuantization);
LMODP_DEFINE_ERROR(QuadratureNonConvergence);
LMODP_DEFINE_ERROR(ShapeMismatch);
LMODP_DEFINE_ERROR(InfeasibleNoise);

#undef LMODP_DEFINE_ERROR

}  // namespace lmodp
