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

#include "lig/retrieval.hpp"

#include <vector>

#include "lig/error.hpp"

namespace lig {

std::optional<Embedding> FusedQueryVector(const InstructionQuery& query, FusionPolicy policy) {
  if (!query.text && !query.visual) {
    throw Error(ErrorCode::kInvalidArgument, "query has neither text nor visual part");
  }
  if (!query.visual) return Normalize(*query.text);
  if (!query.text) return Normalize(*query.visual);
  switch (policy) {
    case FusionPolicy::kSingleText: return Normalize(*query.text);
    case FusionPolicy::kSingleVisual: return Normalize(*query.visual);
    case FusionPolicy::kSum: return SumFusionQuery(*query.text, *query.visual);
    case FusionPolicy::kWeighted: return WeightedFusionQuery(*query.text, *query.visual);
    case FusionPolicy::kRank:
    case FusionPolicy::kNaive: return std::nullopt;
  }
  return std::nullopt;
}

RankedList RunQuery(const VectorIndex& index, const InstructionQuery& query, FusionPolicy policy,
                    std::size_t k, std::size_t nprobe) {
  if (auto q = FusedQueryVector(query, policy)) {
    return index.Search(*q, k, nprobe).ranked;
  }
  const RankedList text = index.Search(*query.text, k, nprobe).ranked;
  const RankedList visual = index.Search(*query.visual, k, nprobe).ranked;
  return policy == FusionPolicy::kRank ? RankFusion(text, visual, k)
                                       : NaiveInterleave(text, visual, k);
}

RankedList RunQueries(const VectorIndex& index, std::span<const InstructionQuery> queries,
                      const QueryConfig& config) {
  std::vector<RankedList> lists;
  lists.reserve(queries.size());
  for (const auto& q : queries) {
    lists.push_back(RunQuery(index, q, config.policy, config.k, config.nprobe));
  }
  return MergeResults(lists, config.merge, config.k);
}

}  // namespace lig
