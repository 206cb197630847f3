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

// Greedy curation of instruction pairs. Every (word, bbox) pair of a class's
// candidate pool is used as a query against the training index and scored by
// the AP@k of its retrieved images. The best pair seeds the set; further
// pairs are added while the AP of the max-merged results strictly improves.

#include <cstddef>
#include <span>
#include <vector>

#include "lig/dataset.hpp"
#include "lig/instructions.hpp"
#include "lig/retrieval.hpp"

namespace lig {

struct PdcConfig {
  std::size_t k = 1000;
  std::size_t max_pairs = 4;
  FusionPolicy fusion = FusionPolicy::kSum;
  MergeMode merge = MergeMode::kMax;
  std::size_t nprobe = 300;
  std::size_t jobs = 1;
};

nlohmann::json ToJson(const PdcConfig& config);

// Top-k images retrieved by one pair on the training index.
RankedList ScorePair(const MultimodalPair& pair, const VectorIndex& index, std::size_t k,
                     FusionPolicy fusion = FusionPolicy::kSum, std::size_t nprobe = 300);

// The greedy objective: AP@k of a ranked list against the positive images.
double AucOfResults(const RankedList& ranked, std::span<const ImageId> positives, std::size_t k);

// Throws kEmptyPool, kNoPositives.
InstructionSet GreedySelect(const CandidatePool& pool, const VectorIndex& index,
                            std::span<const ImageId> positives, const PdcConfig& config);

}  // namespace lig
