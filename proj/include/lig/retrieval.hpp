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

// Executes text / visual / multimodal queries against an index under a chosen
// fusion policy, and combines several queries' results.

#include <cstddef>
#include <optional>
#include <span>

#include "lig/fusion.hpp"
#include "lig/index.hpp"

namespace lig {

struct QueryConfig {
  FusionPolicy policy = FusionPolicy::kSum;
  MergeMode merge = MergeMode::kMax;
  std::size_t k = 1000;
  std::size_t nprobe = 300;
};

// A query may carry either modality or both. Single-modality queries are run
// as plain cosine searches whatever the policy.
struct InstructionQuery {
  std::optional<Embedding> text;
  std::optional<Embedding> visual;
};

// The vector searched for early-fusion and single-modal cases; nullopt for
// the late-fusion policies when both modalities are present.
std::optional<Embedding> FusedQueryVector(const InstructionQuery& query, FusionPolicy policy);

RankedList RunQuery(const VectorIndex& index, const InstructionQuery& query, FusionPolicy policy,
                    std::size_t k, std::size_t nprobe);

// Runs every query and merges the lists with config.merge, truncated to k.
RankedList RunQueries(const VectorIndex& index, std::span<const InstructionQuery> queries,
                      const QueryConfig& config);

}  // namespace lig
