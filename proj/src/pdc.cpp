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

#include "lig/pdc.hpp"

#include <algorithm>

#include "lig/error.hpp"
#include "lig/metrics.hpp"
#include "lig/parallel.hpp"

namespace lig {
namespace {

struct Candidate {
  MultimodalPair pair;
  RankedList results;
  double auc = 0.0;
};

// Better score first; ties go to the lexicographically smaller (word, bbox).
bool Prefer(double auc_a, const Candidate& a, double auc_b, const Candidate& b) {
  if (auc_a != auc_b) return auc_a > auc_b;
  if (a.pair.word != b.pair.word) return a.pair.word < b.pair.word;
  return *a.pair.bbox_id < *b.pair.bbox_id;
}

}  // namespace

nlohmann::json ToJson(const PdcConfig& config) {
  return {{"k", config.k},
          {"max_pairs", config.max_pairs},
          {"fusion", ToString(config.fusion)},
          {"merge", ToString(config.merge)},
          {"nprobe", config.nprobe}};
}

RankedList ScorePair(const MultimodalPair& pair, const VectorIndex& index, std::size_t k,
                     FusionPolicy fusion, std::size_t nprobe) {
  return RunQuery(index, pair.ToQuery(), fusion, k, nprobe);
}

double AucOfResults(const RankedList& ranked, std::span<const ImageId> positives, std::size_t k) {
  return AveragePrecisionAtK(ranked, positives, k);
}

InstructionSet GreedySelect(const CandidatePool& pool, const VectorIndex& index,
                            std::span<const ImageId> positives, const PdcConfig& config) {
  if (pool.visuals.empty() || pool.texts.empty()) {
    throw Error(ErrorCode::kEmptyPool, "class " + pool.class_name + " has an empty candidate pool");
  }
  if (positives.empty()) {
    throw Error(ErrorCode::kNoPositives, "class " + pool.class_name + " has no training positives");
  }
  if (config.max_pairs == 0) throw Error(ErrorCode::kInvalidConfig, "max_pairs must be positive");

  std::vector<Candidate> cands;
  cands.reserve(pool.texts.size() * pool.visuals.size());
  for (const TextCandidate& t : pool.texts) {
    for (const VisualCandidate& v : pool.visuals) cands.push_back({MakePair(t, v), {}, 0.0});
  }
  ParallelFor(cands.size(), config.jobs, [&](std::size_t i) {
    cands[i].results = ScorePair(cands[i].pair, index, config.k, config.fusion, config.nprobe);
    cands[i].auc = AucOfResults(cands[i].results, positives, config.k);
  });

  std::size_t first = 0;
  for (std::size_t i = 1; i < cands.size(); ++i) {
    if (Prefer(cands[i].auc, cands[i], cands[first].auc, cands[first])) first = i;
  }

  InstructionSet set;
  set.class_id = pool.class_id;
  set.class_name = pool.class_name;
  set.method = "pdc";
  set.config = ToJson(config);

  std::vector<bool> chosen(cands.size(), false);
  std::vector<RankedList> selected_lists;
  auto accept = [&](std::size_t i, double auc) {
    chosen[i] = true;
    selected_lists.push_back(cands[i].results);
    MultimodalPair p = cands[i].pair;
    p.train_auc_after = auc;
    set.pairs.push_back(std::move(p));
    set.auc_trace.push_back(auc);
  };
  accept(first, cands[first].auc);

  // Growth works on the cached per-pair lists; merging stored scores is the
  // same as re-running the union of queries.
  std::vector<double> trial(cands.size(), 0.0);
  while (set.pairs.size() < config.max_pairs) {
    ParallelFor(cands.size(), config.jobs, [&](std::size_t i) {
      if (chosen[i]) return;
      std::vector<RankedList> lists = selected_lists;
      lists.push_back(cands[i].results);
      trial[i] = AucOfResults(MergeResults(lists, config.merge, config.k), positives, config.k);
    });
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < cands.size(); ++i) {
      if (chosen[i]) continue;
      if (!best || Prefer(trial[i], cands[i], trial[*best], cands[*best])) best = i;
    }
    if (!best || !(trial[*best] > set.auc_trace.back())) break;
    accept(*best, trial[*best]);
  }
  return set;
}

}  // namespace lig
