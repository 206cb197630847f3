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

#include "lig/metrics.hpp"

#include <algorithm>
#include <unordered_set>

#include "lig/error.hpp"

namespace lig {

double AveragePrecisionAtK(const RankedList& ranked, std::span<const ImageId> positives,
                           std::size_t k) {
  const std::unordered_set<ImageId> pos(positives.begin(), positives.end());
  if (pos.empty()) throw Error(ErrorCode::kNoPositives, "positive set is empty");
  if (k == 0) throw Error(ErrorCode::kInvalidArgument, "k must be positive");
  const std::size_t n = std::min(k, ranked.size());
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t r = 0; r < n; ++r) {
    if (pos.count(ranked[r].item_id) != 0) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(r + 1);
    }
  }
  return sum / static_cast<double>(std::min(pos.size(), k));
}

std::vector<PrPoint> PrecisionRecallCurve(const RankedList& ranked,
                                          std::span<const ImageId> positives, std::size_t max_k) {
  const std::unordered_set<ImageId> pos(positives.begin(), positives.end());
  if (pos.empty()) throw Error(ErrorCode::kNoPositives, "positive set is empty");
  std::vector<PrPoint> curve;
  curve.reserve(max_k);
  std::size_t hits = 0;
  for (std::size_t k = 1; k <= max_k; ++k) {
    if (k <= ranked.size() && pos.count(ranked[k - 1].item_id) != 0) ++hits;
    curve.push_back({k, static_cast<double>(hits) / static_cast<double>(k),
                     static_cast<double>(hits) / static_cast<double>(pos.size())});
  }
  return curve;
}

}  // namespace lig
