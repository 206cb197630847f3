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

// Comparison methods. Each returns an InstructionSet so that baselines and
// greedy curation are evaluated through one code path.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "lig/dataset.hpp"
#include "lig/instructions.hpp"

namespace lig {

enum class BaselineKind { kOriginalTexts, kOriginalPairs, kRandomBBoxes, kRandomPairs, kMeanShift };

std::string_view ToString(BaselineKind kind);
std::optional<BaselineKind> ParseBaselineKind(std::string_view name);

// One text-only entry per word of the class.
InstructionSet OriginalTexts(const CandidatePool& pool);

// n boxes drawn uniformly without replacement from the pool (visual only).
// Throws kPoolTooSmall when the pool has fewer than n boxes.
InstructionSet RandomBBoxes(const CandidatePool& pool, std::size_t n, std::uint64_t seed);

// The RandomBBoxes sample for the same seed, each box paired with a word
// drawn uniformly from the class word list.
InstructionSet RandomPairs(const CandidatePool& pool, std::size_t n, std::uint64_t seed);

struct MeanShiftOptions {
  std::optional<double> bandwidth;  // estimated from the data when unset
  double quantile = 0.3;
  int max_iterations = 300;
};

// Mean distance from each point to its floor(n * quantile)-th (at least 1st)
// nearest neighbour (the point itself counts as the first).
double EstimateBandwidth(std::span<const Embedding> points, double quantile);

struct MeanShiftResult {
  double bandwidth = 0.0;
  std::vector<Embedding> modes;           // strongest first
  std::vector<std::size_t> nearest_point; // per mode, index into the input
};

// Flat-kernel mean shift seeded at every point. Modes closer than
// bandwidth / 2 to a stronger mode are dropped.
MeanShiftResult MeanShift(std::span<const Embedding> points, const MeanShiftOptions& options);

// Boxes nearest the mean-shift modes of the (normalized) pool crops, each
// paired with the class's canonical word.
InstructionSet MeanShiftExamples(const CandidatePool& pool, const MeanShiftOptions& options = {});

// The entries of an original-instruction file that belong to the pool's class.
InstructionSet OriginalPairs(const std::map<ClassId, InstructionSet>& original,
                             const CandidatePool& pool);

}  // namespace lig
