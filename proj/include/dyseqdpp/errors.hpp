// Copyright 2026 The DySeqDPP Authors
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

namespace dyseqdpp {

// Root of every error raised by the library. Each subclass corresponds to
// one failure category callers may want to distinguish.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define DYSEQDPP_DEFINE_ERROR(Name)        \
  class Name : public Error {              \
   public:                                 \
    using Error::Error;                    \
  }

DYSEQDPP_DEFINE_ERROR(InvalidSubset);
DYSEQDPP_DEFINE_ERROR(NumericalFailure);
DYSEQDPP_DEFINE_ERROR(CapacityExceeded);
DYSEQDPP_DEFINE_ERROR(ShapeError);
DYSEQDPP_DEFINE_ERROR(SingularKernel);
DYSEQDPP_DEFINE_ERROR(InvalidLength);
DYSEQDPP_DEFINE_ERROR(InvalidInput);
DYSEQDPP_DEFINE_ERROR(InvalidAction);
DYSEQDPP_DEFINE_ERROR(InvalidTrajectory);
DYSEQDPP_DEFINE_ERROR(MissingAnnotation);
DYSEQDPP_DEFINE_ERROR(ParseError);
DYSEQDPP_DEFINE_ERROR(VersionError);
DYSEQDPP_DEFINE_ERROR(DivergedError);

#undef DYSEQDPP_DEFINE_ERROR

}  // namespace dyseqdpp
