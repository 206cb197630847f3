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

#include "lig/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>
#include <unordered_set>

#include "lig/error.hpp"

namespace lig {
namespace {

void CheckSameDimension(EmbeddingView a, EmbeddingView b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "dimensions " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
  }
}

double CheckedNorm(EmbeddingView v) {
  const double norm = L2Norm(v);
  if (!(norm >= kZeroNormThreshold)) {
    throw Error(ErrorCode::kZeroVector, "vector norm below threshold");
  }
  return norm;
}

// Normalized copy kept in double so fused queries round only once.
std::vector<double> UnitDouble(EmbeddingView v) {
  const double norm = CheckedNorm(v);
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<double>(v[i]) / norm;
  return out;
}

}  // namespace

std::string_view ToString(FusionPolicy policy) {
  switch (policy) {
    case FusionPolicy::kSingleText: return "single_text";
    case FusionPolicy::kSingleVisual: return "single_visual";
    case FusionPolicy::kSum: return "sum";
    case FusionPolicy::kWeighted: return "weighted";
    case FusionPolicy::kRank: return "rank";
    case FusionPolicy::kNaive: return "naive";
  }
  return "unknown";
}

std::string_view ToString(MergeMode mode) {
  return mode == MergeMode::kMax ? "max" : "avg";
}

std::optional<FusionPolicy> ParseFusionPolicy(std::string_view name) {
  for (auto p : {FusionPolicy::kSingleText, FusionPolicy::kSingleVisual, FusionPolicy::kSum,
                 FusionPolicy::kWeighted, FusionPolicy::kRank, FusionPolicy::kNaive}) {
    if (ToString(p) == name) return p;
  }
  return std::nullopt;
}

std::optional<MergeMode> ParseMergeMode(std::string_view name) {
  if (name == "max") return MergeMode::kMax;
  if (name == "avg") return MergeMode::kAvg;
  return std::nullopt;
}

bool IsEarlyFusion(FusionPolicy policy) {
  return policy != FusionPolicy::kRank && policy != FusionPolicy::kNaive;
}

RankedList MakeRankedList(std::vector<ScoredItem> items, std::size_t k) {
  const std::size_t keep = std::min(k, items.size());
  std::partial_sort(items.begin(), items.begin() + static_cast<std::ptrdiff_t>(keep), items.end(),
                    RanksBefore);
  items.resize(keep);
  return RankedList{std::move(items)};
}

bool IsValidRankedList(const RankedList& list) {
  std::unordered_set<ItemId> seen;
  for (std::size_t i = 0; i < list.size(); ++i) {
    if (!std::isfinite(list[i].score)) return false;
    if (!seen.insert(list[i].item_id).second) return false;
    if (i > 0 && !RanksBefore(list[i - 1], list[i])) return false;
  }
  return true;
}

double Dot(EmbeddingView a, EmbeddingView b) {
  CheckSameDimension(a, b);
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sum += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return sum;
}

double L2Norm(EmbeddingView v) {
  double sum = 0.0;
  for (float x : v) sum += static_cast<double>(x) * static_cast<double>(x);
  return std::sqrt(sum);
}

Embedding Normalize(EmbeddingView v) {
  const double norm = CheckedNorm(v);
  Embedding out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = static_cast<float>(static_cast<double>(v[i]) / norm);
  }
  return out;
}

double SingleScore(EmbeddingView query, EmbeddingView item) {
  CheckSameDimension(query, item);
  const double qn = CheckedNorm(query);
  const double xn = CheckedNorm(item);
  return std::clamp(Dot(query, item) / (qn * xn), -1.0, 1.0);
}

Embedding SumFusionQuery(EmbeddingView text, EmbeddingView visual) {
  CheckSameDimension(text, visual);
  const auto t = UnitDouble(text);
  const auto v = UnitDouble(visual);
  Embedding q(t.size());
  for (std::size_t i = 0; i < q.size(); ++i) q[i] = static_cast<float>(v[i] + t[i]);
  return q;
}

Embedding WeightedFusionQuery(EmbeddingView text, EmbeddingView visual) {
  CheckSameDimension(text, visual);
  const auto t = UnitDouble(text);
  const auto v = UnitDouble(visual);
  double w = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) w += t[i] * v[i];
  w = std::clamp(w, -1.0, 1.0);
  std::vector<double> raw(t.size());
  double sq = 0.0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    raw[i] = (1.0 - w) * v[i] + (1.0 + w) * t[i];
    sq += raw[i] * raw[i];
  }
  // At w = -1 the text term vanishes and the query points away from the text;
  // that case is rejected along with any collapsed result.
  if (w <= -1.0 + kZeroNormThreshold || std::sqrt(sq) < kZeroNormThreshold) {
    throw Error(ErrorCode::kDegenerateQuery, "text and visual queries are antipodal");
  }
  Embedding q(raw.size());
  for (std::size_t i = 0; i < q.size(); ++i) q[i] = static_cast<float>(raw[i]);
  return q;
}

double RankFusionScore(std::int64_t rank_visual, std::int64_t rank_text) {
  if (rank_visual < 1 || rank_text < 1) {
    throw Error(ErrorCode::kInvalidRank, "ranks are 1-based");
  }
  return 1.0 / static_cast<double>(rank_visual) + 1.0 / static_cast<double>(rank_text);
}

RankedList RankFusion(const RankedList& text, const RankedList& visual, std::size_t k) {
  std::unordered_map<ItemId, double> fused;
  for (const RankedList* list : {&text, &visual}) {
    for (std::size_t i = 0; i < list->size(); ++i) {
      fused[(*list)[i].item_id] += 1.0 / static_cast<double>(i + 1);
    }
  }
  std::vector<ScoredItem> items;
  items.reserve(fused.size());
  for (const auto& [id, score] : fused) items.push_back({id, score});
  return MakeRankedList(std::move(items), k);
}

RankedList NaiveInterleave(const RankedList& text, const RankedList& visual, std::size_t k) {
  RankedList out;
  std::unordered_set<ItemId> taken;
  std::size_t ti = 0;
  std::size_t vi = 0;
  bool text_turn = true;
  auto take_next = [&](const RankedList& list, std::size_t& pos) {
    while (pos < list.size()) {
      const ItemId id = list[pos++].item_id;
      if (taken.insert(id).second) {
        out.items.push_back({id, 0.0});
        return;
      }
    }
  };
  while (out.size() < k && (ti < text.size() || vi < visual.size())) {
    if (text_turn) {
      take_next(text, ti);
    } else {
      take_next(visual, vi);
    }
    text_turn = !text_turn;
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.items[i].score = static_cast<double>(k - i);
  }
  return out;
}

RankedList MergeResults(std::span<const RankedList> lists, MergeMode mode, std::size_t k) {
  struct Acc {
    double value = 0.0;
    std::size_t count = 0;
  };
  std::unordered_map<ItemId, Acc> acc;
  for (const RankedList& list : lists) {
    for (const ScoredItem& item : list.items) {
      auto [it, inserted] = acc.try_emplace(item.item_id);
      Acc& a = it->second;
      if (mode == MergeMode::kMax) {
        a.value = inserted ? item.score : std::max(a.value, item.score);
      } else {
        a.value += item.score;
      }
      ++a.count;
    }
  }
  std::vector<ScoredItem> items;
  items.reserve(acc.size());
  for (const auto& [id, a] : acc) {
    const double score = mode == MergeMode::kMax ? a.value : a.value / static_cast<double>(a.count);
    items.push_back({id, score});
  }
  return MakeRankedList(std::move(items), k);
}

double PatchFusion(std::span<const double> patch_scores) {
  if (patch_scores.empty()) throw Error(ErrorCode::kEmptyGroup, "image has no patch scores");
  return *std::max_element(patch_scores.begin(), patch_scores.end());
}

std::vector<ScoredItem> PatchFusionByImage(std::span<const ScoredItem> patch_scores) {
  if (patch_scores.empty()) throw Error(ErrorCode::kEmptyGroup, "no patch scores");
  std::map<ItemId, double> best;
  for (const ScoredItem& p : patch_scores) {
    auto [it, inserted] = best.try_emplace(p.item_id, p.score);
    if (!inserted) it->second = std::max(it->second, p.score);
  }
  std::vector<ScoredItem> out;
  out.reserve(best.size());
  for (const auto& [id, score] : best) out.push_back({id, score});
  return out;
}

}  // namespace lig
