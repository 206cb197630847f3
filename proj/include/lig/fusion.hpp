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

// Similarity scoring and result-fusion primitives. Everything here is a pure
// function over embeddings or ranked lists; vectors are stored as float32 and
// all reductions accumulate in double.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lig {

using ItemId = std::int64_t;
using Embedding = std::vector<float>;
using EmbeddingView = std::span<const float>;

// Norms below this are treated as the zero vector.
inline constexpr double kZeroNormThreshold = 1e-12;

struct ScoredItem {
  ItemId item_id = 0;
  double score = 0.0;

  friend bool operator==(const ScoredItem&, const ScoredItem&) = default;
};

// Descending score, ties broken by ascending item_id. Ids are unique.
struct RankedList {
  std::vector<ScoredItem> items;

  std::size_t size() const { return items.size(); }
  bool empty() const { return items.empty(); }
  const ScoredItem& operator[](std::size_t i) const { return items[i]; }

  friend bool operator==(const RankedList&, const RankedList&) = default;
};

enum class FusionPolicy { kSingleText, kSingleVisual, kSum, kWeighted, kRank, kNaive };
enum class MergeMode { kMax, kAvg };

std::string_view ToString(FusionPolicy policy);
std::string_view ToString(MergeMode mode);
std::optional<FusionPolicy> ParseFusionPolicy(std::string_view name);
std::optional<MergeMode> ParseMergeMode(std::string_view name);

// True for policies that produce one query vector before search.
bool IsEarlyFusion(FusionPolicy policy);

// Strict weak order used for every ranking in the library.
inline bool RanksBefore(const ScoredItem& a, const ScoredItem& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.item_id < b.item_id;
}

// Sorts by RanksBefore and keeps the first k entries.
RankedList MakeRankedList(std::vector<ScoredItem> items, std::size_t k);
bool IsValidRankedList(const RankedList& list);

double Dot(EmbeddingView a, EmbeddingView b);
double L2Norm(EmbeddingView v);

// v / ||v||. Throws kZeroVector when ||v|| < kZeroNormThreshold.
Embedding Normalize(EmbeddingView v);

// Cosine similarity q^T x / (||q|| ||x||).
double SingleScore(EmbeddingView query, EmbeddingView item);

// q = normalize(visual) + normalize(text), deliberately not re-normalized so
// that q^T x_hat equals cos(text, x) + cos(visual, x).
Embedding SumFusionQuery(EmbeddingView text, EmbeddingView visual);

// w = cos(text, visual); q = (1 - w) * visual_hat + (1 + w) * text_hat.
// Throws kDegenerateQuery when the result collapses (antipodal inputs).
Embedding WeightedFusionQuery(EmbeddingView text, EmbeddingView visual);

// 1/rank_visual + 1/rank_text. Ranks are 1-based.
double RankFusionScore(std::int64_t rank_visual, std::int64_t rank_text);

// Inverse-rank late fusion over two retrieved lists. An item missing from one
// list contributes nothing for that list.
RankedList RankFusion(const RankedList& text, const RankedList& visual, std::size_t k);

// Alternates heads of the text and visual lists (text first), skipping items
// already taken. Output scores are synthetic: k, k-1, ...
RankedList NaiveInterleave(const RankedList& text, const RankedList& visual, std::size_t k);

// Union of the lists; duplicate ids combined by max or by the mean over the
// lists that contain them.
RankedList MergeResults(std::span<const RankedList> lists, MergeMode mode, std::size_t k);

// Max over one image's patch scores. Throws kEmptyGroup on empty input.
double PatchFusion(std::span<const double> patch_scores);

// Grouped form: each entry is (image id, patch score). Returns one entry per
// image, ordered by image id.
std::vector<ScoredItem> PatchFusionByImage(std::span<const ScoredItem> patch_scores);

}  // namespace lig
