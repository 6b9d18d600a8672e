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

#include "posetrack/error.hpp"

namespace posetrack
{

const char* to_string(Errc code) noexcept
{
  switch (code) {
    case Errc::NotARotation: return "NotARotation";
    case Errc::BehindCamera: return "BehindCamera";
    case Errc::NonPositiveDistance: return "NonPositiveDistance";
    case Errc::InvalidIntrinsics: return "InvalidIntrinsics";
    case Errc::InvalidCuboid: return "InvalidCuboid";
    case Errc::DegenerateGeometry: return "DegenerateGeometry";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::InvalidId: return "InvalidId";
    case Errc::DistanceOutOfRange: return "DistanceOutOfRange";
    case Errc::NegativePitch: return "NegativePitch";
    case Errc::YawUncovered: return "YawUncovered";
    case Errc::EmptyDataset: return "EmptyDataset";
    case Errc::InvalidPriorTable: return "InvalidPriorTable";
    case Errc::RangeInverted: return "RangeInverted";
    case Errc::InverseOutOfRange: return "InverseOutOfRange";
    case Errc::PriorHeadMismatch: return "PriorHeadMismatch";
    case Errc::OriginOffScreen: return "OriginOffScreen";
    case Errc::OrientationOutOfRange: return "OrientationOutOfRange";
    case Errc::AspectMismatch: return "AspectMismatch";
    case Errc::InvalidGrid: return "InvalidGrid";
    case Errc::HullBehindCamera: return "HullBehindCamera";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::ParseError: return "ParseError";
    case Errc::ValidationError: return "ValidationError";
    case Errc::TooFewRecords: return "TooFewRecords";
    case Errc::UnknownCamera: return "UnknownCamera";
    case Errc::EmptyGroup: return "EmptyGroup";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& what)
  : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
{
}

}  // namespace posetrack
