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

#include <span>
#include <vector>

namespace eegstress {

// Mann-Whitney AUC: P(score+ > score-) + 0.5 P(score+ == score-).
// Throws SingleClassLabels unless both label values occur.
double roc_auc(std::span<const double> scores, const std::vector<bool>& labels);

// Mean negative log-likelihood of the true class; rows are probability vectors.
double multiclass_log_loss(const std::vector<std::vector<double>>& probabilities,
                           std::span<const int> labels);

}  // namespace eegstress
