// Copyright 2026 The posetrack Authors
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

#ifndef POSETRACK_ERROR_HPP_
#define POSETRACK_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace posetrack
{

/// Failure categories raised by the library. Every thrown posetrack::Error
/// carries exactly one of these.
enum class Errc
{
  // geometry
  NotARotation,
  BehindCamera,
  NonPositiveDistance,
  InvalidIntrinsics,
  InvalidCuboid,
  DegenerateGeometry,
  EmptyInput,
  // priors
  InvalidId,
  DistanceOutOfRange,
  NegativePitch,
  YawUncovered,
  EmptyDataset,
  InvalidPriorTable,
  // codec
  RangeInverted,
  InverseOutOfRange,
  PriorHeadMismatch,
  OriginOffScreen,
  OrientationOutOfRange,
  AspectMismatch,
  InvalidGrid,
  HullBehindCamera,
  // loss
  ShapeMismatch,
  // syngen
  ParseError,
  ValidationError,
  TooFewRecords,
  // fusion
  UnknownCamera,
  EmptyGroup,
};

const char* to_string(Errc code) noexcept;

class Error : public std::runtime_error
{
public:
  Error(Errc code, const std::string& what);

  Errc code() const noexcept { return code_; }

private:
  Errc code_;
};

}  // namespace posetrack

#endif  // POSETRACK_ERROR_HPP_
