// Copyright 2026 The Authors.
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

#include <cstddef>
#include <span>
#include <vector>

#include "lig/fusion.hpp"
#include "lig/index.hpp"

namespace lig {

// AP@k over the first min(k, |ranked|) entries:
//   sum over hits at rank r of precision@r, divided by min(|positives|, k).
// Throws kNoPositives when `positives` is empty.
double AveragePrecisionAtK(const RankedList& ranked, std::span<const ImageId> positives,
                           std::size_t k);

struct PrPoint {
  std::size_t k = 0;
  double precision = 0.0;
  double recall = 0.0;
};

// Precision and recall at every cutoff 1..max_k. Cutoffs past the end of the
// list keep the final hit count, so precision keeps falling as 1/k.
std::vector<PrPoint> PrecisionRecallCurve(const RankedList& ranked,
                                          std::span<const ImageId> positives, std::size_t max_k);

}  // namespace lig
