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

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace eegstress {

// Domain error kinds. Each operation documents which of these it raises.
enum class Errc {
  MalformedHeader,
  InconsistentSignal,
  TruncatedData,
  IoFailure,
  MissingChannel,
  NonNumericCell,
  DuplicateSubject,
  UnknownClassLabel,
  InvalidRecording,
  InvalidFilterSpec,
  UnstableFilter,
  InvalidRate,
  TooFewChannels,
  EpochTooLong,
  SegmentTooLong,
  EmptyBand,
  InvalidParams,
  SingleClassTraining,
  EmptyEvalSet,
  DimensionMismatch,
  TooFewSubjectsForFolds,
  MissingCover,
  TooManyFeatures,
  EmptyMatrix,
  EmptyInput,
  SingleClassLabels,
  TooFewSubjects,
  FeatureMismatch,
  EmptyGroup,
  UnknownSubject,
  InvalidSpec,
  MissingRole,
  InvalidConfig,
};

std::string_view to_string(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what);

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace eegstress
