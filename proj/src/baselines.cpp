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

#include "lig/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lig/error.hpp"
#include "lig/random.hpp"

namespace lig {
namespace {

double Distance(EmbeddingView a, EmbeddingView b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

std::vector<std::size_t> SampleBoxes(const CandidatePool& pool, std::size_t n, Rng& rng) {
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "need at least one example");
  if (pool.visuals.size() < n) {
    throw Error(ErrorCode::kPoolTooSmall, "class " + pool.class_name + " has " +
                                              std::to_string(pool.visuals.size()) +
                                              " boxes, asked for " + std::to_string(n));
  }
  return SampleWithoutReplacement(rng, pool.visuals.size(), n);
}

InstructionSet EmptySet(const CandidatePool& pool, std::string method) {
  InstructionSet set;
  set.class_id = pool.class_id;
  set.class_name = pool.class_name;
  set.method = std::move(method);
  return set;
}

}  // namespace

std::string_view ToString(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::kOriginalTexts: return "original_texts";
    case BaselineKind::kOriginalPairs: return "original_pairs";
    case BaselineKind::kRandomBBoxes: return "random_bboxes";
    case BaselineKind::kRandomPairs: return "random_pairs";
    case BaselineKind::kMeanShift: return "mean_shift";
  }
  return "unknown";
}

std::optional<BaselineKind> ParseBaselineKind(std::string_view name) {
  for (auto k : {BaselineKind::kOriginalTexts, BaselineKind::kOriginalPairs,
                 BaselineKind::kRandomBBoxes, BaselineKind::kRandomPairs, BaselineKind::kMeanShift}) {
    if (ToString(k) == name) return k;
  }
  return std::nullopt;
}

InstructionSet OriginalTexts(const CandidatePool& pool) {
  InstructionSet set = EmptySet(pool, "original_texts");
  for (const TextCandidate& t : pool.texts) set.pairs.push_back(MakeTextEntry(t));
  return set;
}

InstructionSet RandomBBoxes(const CandidatePool& pool, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  InstructionSet set = EmptySet(pool, "random_bboxes");
  for (std::size_t i : SampleBoxes(pool, n, rng)) set.pairs.push_back(MakeVisualEntry(pool.visuals[i]));
  set.config = {{"seed", seed}, {"n_examples", n}};
  return set;
}

InstructionSet RandomPairs(const CandidatePool& pool, std::size_t n, std::uint64_t seed) {
  if (pool.texts.empty()) throw Error(ErrorCode::kEmptyPool, "class " + pool.class_name + " has no words");
  Rng rng(seed);
  InstructionSet set = EmptySet(pool, "random_pairs");
  const auto boxes = SampleBoxes(pool, n, rng);
  for (std::size_t i : boxes) {
    const std::size_t w = static_cast<std::size_t>(UniformIndex(rng, pool.texts.size()));
    set.pairs.push_back(MakePair(pool.texts[w], pool.visuals[i]));
  }
  set.config = {{"seed", seed}, {"n_examples", n}};
  return set;
}

double EstimateBandwidth(std::span<const Embedding> points, double quantile) {
  const std::size_t n = points.size();
  if (n == 0) return 0.0;
  const std::size_t neighbours =
      std::clamp<std::size_t>(static_cast<std::size_t>(static_cast<double>(n) * quantile), 1, n);
  double total = 0.0;
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) d[j] = Distance(points[i], points[j]);
    std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(neighbours - 1), d.end());
    total += d[neighbours - 1];
  }
  return total / static_cast<double>(n);
}

MeanShiftResult MeanShift(std::span<const Embedding> points, const MeanShiftOptions& options) {
  MeanShiftResult result;
  if (points.empty()) return result;
  const std::size_t dim = points.front().size();
  const double bw = options.bandwidth ? *options.bandwidth : EstimateBandwidth(points, options.quantile);
  result.bandwidth = bw;

  struct Mode {
    std::vector<double> center;
    std::size_t support = 0;
    std::size_t seed = 0;
  };
  std::vector<Mode> modes;
  for (std::size_t s = 0; s < points.size(); ++s) {
    std::vector<double> x(points[s].begin(), points[s].end());
    std::size_t support = 0;
    for (int iter = 0; iter < options.max_iterations; ++iter) {
      std::vector<double> mean(dim, 0.0);
      std::size_t count = 0;
      for (const Embedding& p : points) {
        double d2 = 0.0;
        for (std::size_t j = 0; j < dim; ++j) d2 += (p[j] - x[j]) * (p[j] - x[j]);
        if (std::sqrt(d2) <= bw) {
          for (std::size_t j = 0; j < dim; ++j) mean[j] += p[j];
          ++count;
        }
      }
      if (count == 0) break;
      for (double& m : mean) m /= static_cast<double>(count);
      double shift = 0.0;
      for (std::size_t j = 0; j < dim; ++j) shift += (mean[j] - x[j]) * (mean[j] - x[j]);
      x = std::move(mean);
      support = count;
      if (std::sqrt(shift) <= 1e-3 * bw) break;
    }
    modes.push_back({std::move(x), support, s});
  }
  std::stable_sort(modes.begin(), modes.end(),
                   [](const Mode& a, const Mode& b) { return a.support > b.support; });

  const double merge_radius = bw / 2.0;
  std::vector<const Mode*> kept;
  for (const Mode& m : modes) {
    bool duplicate = false;
    for (const Mode* k : kept) {
      double d2 = 0.0;
      for (std::size_t j = 0; j < dim; ++j) d2 += (m.center[j] - k->center[j]) * (m.center[j] - k->center[j]);
      if (std::sqrt(d2) <= merge_radius) {
        duplicate = true;
        break;
      }
    }
    if (!duplicate) kept.push_back(&m);
  }
  for (const Mode* m : kept) {
    Embedding center(dim);
    for (std::size_t j = 0; j < dim; ++j) center[j] = static_cast<float>(m->center[j]);
    std::size_t nearest = 0;
    double best = Distance(points[0], center);
    for (std::size_t i = 1; i < points.size(); ++i) {
      const double d = Distance(points[i], center);
      if (d < best) {
        best = d;
        nearest = i;
      }
    }
    result.modes.push_back(std::move(center));
    result.nearest_point.push_back(nearest);
  }
  return result;
}

InstructionSet MeanShiftExamples(const CandidatePool& pool, const MeanShiftOptions& options) {
  if (pool.visuals.empty()) throw Error(ErrorCode::kEmptyPool, "class " + pool.class_name + " has no boxes");
  if (pool.texts.empty()) throw Error(ErrorCode::kEmptyPool, "class " + pool.class_name + " has no words");
  std::vector<Embedding> points;
  points.reserve(pool.visuals.size());
  for (const VisualCandidate& v : pool.visuals) points.push_back(Normalize(v.embedding));
  const MeanShiftResult ms = MeanShift(points, options);

  const TextCandidate* canonical = &pool.texts.front();
  for (const TextCandidate& t : pool.texts) {
    if (t.word == pool.class_name) canonical = &t;
  }
  InstructionSet set = EmptySet(pool, "mean_shift");
  std::vector<bool> used(pool.visuals.size(), false);
  for (std::size_t idx : ms.nearest_point) {
    if (used[idx]) continue;
    used[idx] = true;
    set.pairs.push_back(MakePair(*canonical, pool.visuals[idx]));
  }
  set.config = {{"bandwidth", ms.bandwidth}, {"modes", ms.modes.size()}};
  return set;
}

InstructionSet OriginalPairs(const std::map<ClassId, InstructionSet>& original,
                             const CandidatePool& pool) {
  auto it = original.find(pool.class_id);
  if (it == original.end()) {
    throw Error(ErrorCode::kMissingEmbedding,
                "original instructions have no entries for class " + pool.class_name);
  }
  InstructionSet set = it->second;
  set.method = "original_pairs";
  return set;
}

}  // namespace lig
