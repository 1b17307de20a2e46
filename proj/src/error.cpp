// Copyright 2026 The eegstress Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "eegstress/error.hpp"

namespace eegstress {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::MalformedHeader: return "MalformedHeader";
    case Errc::InconsistentSignal: return "InconsistentSignal";
    case Errc::TruncatedData: return "TruncatedData";
    case Errc::IoFailure: return "IoFailure";
    case Errc::MissingChannel: return "MissingChannel";
    case Errc::NonNumericCell: return "NonNumericCell";
    case Errc::DuplicateSubject: return "DuplicateSubject";
    case Errc::UnknownClassLabel: return "UnknownClassLabel";
    case Errc::InvalidRecording: return "InvalidRecording";
    case Errc::InvalidFilterSpec: return "InvalidFilterSpec";
    case Errc::UnstableFilter: return "UnstableFilter";
    case Errc::InvalidRate: return "InvalidRate";
    case Errc::TooFewChannels: return "TooFewChannels";
    case Errc::EpochTooLong: return "EpochTooLong";
    case Errc::SegmentTooLong: return "SegmentTooLong";
    case Errc::EmptyBand: return "EmptyBand";
    case Errc::InvalidParams: return "InvalidParams";
    case Errc::SingleClassTraining: return "SingleClassTraining";
    case Errc::EmptyEvalSet: return "EmptyEvalSet";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::TooFewSubjectsForFolds: return "TooFewSubjectsForFolds";
    case Errc::MissingCover: return "MissingCover";
    case Errc::TooManyFeatures: return "TooManyFeatures";
    case Errc::EmptyMatrix: return "EmptyMatrix";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::SingleClassLabels: return "SingleClassLabels";
    case Errc::TooFewSubjects: return "TooFewSubjects";
    case Errc::FeatureMismatch: return "FeatureMismatch";
    case Errc::EmptyGroup: return "EmptyGroup";
    case Errc::UnknownSubject: return "UnknownSubject";
    case Errc::InvalidSpec: return "InvalidSpec";
    case Errc::MissingRole: return "MissingRole";
    case Errc::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

}  // namespace eegstress
