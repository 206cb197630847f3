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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "lig/error.hpp"
#include "lig/synth.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace lig {
namespace {

using testing::CodeOf;

using testing::ExhaustiveSubsetSearch;
using testing::OracleAp;
using testing::PairKey;
using TinyInstance = testing::TinyGreedyInstance;

std::vector<PairKey> Keys(const InstructionSet& set) {
  std::vector<PairKey> out;
  for (const MultimodalPair& p : set.pairs) out.emplace_back(p.word, *p.bbox_id);
  return out;
}

TEST(Greedy, MatchesExhaustiveSubsetSearch) {
  const TinyInstance t;
  const auto best1 = ExhaustiveSubsetSearch(t, 1);
  const auto best2 = ExhaustiveSubsetSearch(t, 2);
  // The construction has one dominant pair and one complement, both unique.
  ASSERT_EQ(best1.ties, 1);
  ASSERT_EQ(best2.ties, 1);
  ASSERT_GT(best2.ap, best1.ap);
  ASSERT_EQ(best1.subset[0], (PairKey{"alpha", 10}));

  PdcConfig cfg;
  cfg.max_pairs = 2;
  const InstructionSet set = GreedySelect(t.pool, t.index, t.positives, cfg);
  ASSERT_EQ(set.pairs.size(), 2u);
  EXPECT_EQ(Keys(set)[0], best1.subset[0]);
  std::vector<PairKey> got = Keys(set);
  std::sort(got.begin(), got.end());
  EXPECT_EQ(got, best2.subset);
  EXPECT_NEAR(set.auc_trace[0], best1.ap, 1e-9);
  EXPECT_NEAR(set.auc_trace[1], best2.ap, 1e-9);
}

TEST(Greedy, StopsOncePerfect) {
  const TinyInstance t;
  const InstructionSet set = GreedySelect(t.pool, t.index, t.positives, PdcConfig{});
  ASSERT_EQ(set.pairs.size(), 2u);
  EXPECT_DOUBLE_EQ(set.auc_trace.back(), 1.0);
  EXPECT_EQ(set.method, "pdc");
  EXPECT_EQ(set.pairs[1].train_auc_after, set.auc_trace[1]);
}

TEST(Greedy, SinglePerfectPairIsKeptAlone) {
  TinyInstance t;
  t.positives = {0, 1, 2, 3};
  const InstructionSet set = GreedySelect(t.pool, t.index, t.positives, PdcConfig{});
  ASSERT_EQ(set.pairs.size(), 1u);
  EXPECT_EQ(Keys(set)[0], (PairKey{"alpha", 10}));
  EXPECT_DOUBLE_EQ(set.auc_trace[0], 1.0);
}

TEST(Greedy, MaxPairsCapsTheSet) {
  const TinyInstance t;
  PdcConfig cfg;
  cfg.max_pairs = 1;
  EXPECT_EQ(GreedySelect(t.pool, t.index, t.positives, cfg).pairs.size(), 1u);
}

TEST(Greedy, Errors) {
  const TinyInstance t;
  CandidatePool empty = t.pool;
  empty.visuals.clear();
  EXPECT_EQ(CodeOf([&] { GreedySelect(empty, t.index, t.positives, {}); }),
            ErrorCode::kEmptyPool);
  empty = t.pool;
  empty.texts.clear();
  EXPECT_EQ(CodeOf([&] { GreedySelect(empty, t.index, t.positives, {}); }), ErrorCode::kEmptyPool);
  EXPECT_EQ(CodeOf([&] { GreedySelect(t.pool, t.index, std::vector<ImageId>{}, {}); }),
            ErrorCode::kNoPositives);
  PdcConfig cfg;
  cfg.max_pairs = 0;
  EXPECT_EQ(CodeOf([&] { GreedySelect(t.pool, t.index, t.positives, cfg); }),
            ErrorCode::kInvalidConfig);
}

TEST(AucOfResults, Examples) {
  const RankedList two{{{1, 0.9}, {2, 0.8}}};
  EXPECT_DOUBLE_EQ(AucOfResults(two, std::vector<ImageId>{1, 2}, 1000), 1.0);
  const RankedList three{{{1, 0.9}, {7, 0.8}, {2, 0.7}}};
  EXPECT_NEAR(AucOfResults(three, std::vector<ImageId>{1, 2}, 3), (1.0 + 2.0 / 3.0) / 2.0, 1e-9);
  EXPECT_EQ(CodeOf([&] { AucOfResults(three, std::vector<ImageId>{}, 3); }), ErrorCode::kNoPositives);
}

TEST(AucOfResults, RandomListsMatchOracle) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<ImageId> order(20);
    for (int i = 0; i < 20; ++i) order[i] = i;
    Shuffle(rng, order);
    RankedList list;
    for (std::size_t r = 0; r < order.size(); ++r) list.items.push_back({order[r], 1.0 - 0.01 * r});
    std::set<ImageId> pos;
    std::vector<ImageId> pos_list;
    for (ImageId i = 0; i < 20; ++i) {
      if (UniformUnit(rng) < 0.3 || i == 0) {
        pos.insert(i);
        pos_list.push_back(i);
      }
    }
    EXPECT_NEAR(AucOfResults(list, pos_list, 20), OracleAp(order, pos, 20), 1e-12);
  }
}

// A small synthetic world with folds, shared by the tests below.
struct SmallWorld {
  SynthWorld world;
  AnnotatedDataset ds;
  std::vector<ImageId> train;
  VectorIndex index;

  explicit SmallWorld(double sigma, int per_class = 12, int n_classes = 4) {
    SynthConfig cfg;
    cfg.noise_sigma = sigma;
    cfg.images_per_class = per_class;
    cfg.n_classes = n_classes;
    world = SynthGenerate(cfg);
    ds = SplitFolds(world.dataset, 5, 0);
    train = ds.TrainImages(0);
    index = BuildImageIndex(world.bundle, train, {});
  }
};

TEST(ScorePair, MatchesBruteForce) {
  const SmallWorld w(0.1, 10, 5);
  const std::vector<ImageId> all = w.ds.image_ids();
  ASSERT_EQ(all.size(), 50u);
  const VectorIndex index = BuildImageIndex(w.world.bundle, all, {});
  const ClassInfo& c = w.ds.classes()[1];
  const CandidatePool pool = BuildCandidatePool(w.ds, w.world.bundle, c.id, all);
  const MultimodalPair pair = MakePair(pool.texts[0], pool.visuals[3]);

  std::vector<double> q(pair.text_embedding.size());
  const Embedding tn = Normalize(pair.text_embedding), vn = Normalize(pair.visual_embedding);
  for (std::size_t j = 0; j < q.size(); ++j) q[j] = static_cast<double>(tn[j]) + vn[j];
  double qn = 0.0;
  for (double x : q) qn += x * x;
  qn = std::sqrt(qn);
  std::map<ImageId, double> best;
  const EmbeddingBundle& b = w.world.bundle;
  for (std::size_t i = 0; i < b.patch_keys.size(); ++i) {
    const EmbeddingView p = b.patch(i);
    double dot = 0.0, pn = 0.0;
    for (std::size_t j = 0; j < q.size(); ++j) {
      dot += q[j] * p[j];
      pn += static_cast<double>(p[j]) * p[j];
    }
    const double s = dot / (qn * std::sqrt(pn));
    auto [it, fresh] = best.emplace(b.patch_keys[i].image_id, s);
    if (!fresh) it->second = std::max(it->second, s);
  }

  const RankedList got = ScorePair(pair, index, 1000);
  ASSERT_EQ(got.size(), 50u);
  const std::vector<ImageId> order = testing::OrderByScore(best);
  for (std::size_t r = 0; r < got.size(); ++r) {
    EXPECT_NEAR(got[r].score, best.at(order[r]), 1e-5) << "rank " << r;
    EXPECT_NEAR(best.at(got[r].item_id), got[r].score, 1e-5) << "rank " << r;
  }
  const RankedList one = ScorePair(pair, index, 1);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0], got[0]);
}

TEST(Greedy, ZeroNoiseWorldPicksTheClassWordFirst) {
  const SmallWorld w(0.0);
  for (const ClassInfo& c : w.ds.classes()) {
    const CandidatePool pool = BuildCandidatePool(w.ds, w.world.bundle, c.id, w.train);
    const auto positives = w.ds.ImagesWithClass(c.id, w.train);
    const InstructionSet set = GreedySelect(pool, w.index, positives, PdcConfig{});
    ASSERT_EQ(set.pairs.size(), 1u) << c.name;
    EXPECT_DOUBLE_EQ(set.auc_trace[0], 1.0);
    EXPECT_NE(std::find(c.words.begin(), c.words.end(), set.pairs[0].word), c.words.end());
  }
}

TEST(Greedy, PropertiesOnSyntheticWorld) {
  const SmallWorld w(0.1);
  for (const ClassInfo& c : w.ds.classes()) {
    const CandidatePool pool = BuildCandidatePool(w.ds, w.world.bundle, c.id, w.train);
    const auto positives = w.ds.ImagesWithClass(c.id, w.train);
    const std::set<ImageId> pos(positives.begin(), positives.end());
    PdcConfig cfg;
    const InstructionSet set = GreedySelect(pool, w.index, positives, cfg);

    ASSERT_GE(set.pairs.size(), 1u);
    ASSERT_LE(set.pairs.size(), cfg.max_pairs);
    ASSERT_EQ(set.auc_trace.size(), set.pairs.size());
    for (std::size_t i = 1; i < set.auc_trace.size(); ++i) {
      EXPECT_GT(set.auc_trace[i], set.auc_trace[i - 1]);
    }

    // Rescan: no single pair beats the first one.
    double best = 0.0;
    for (const TextCandidate& t : pool.texts) {
      for (const VisualCandidate& v : pool.visuals) {
        const RankedList r = ScorePair(MakePair(t, v), w.index, cfg.k);
        best = std::max(best, OracleAp(testing::Ids(r), pos, cfg.k));
      }
    }
    EXPECT_NEAR(set.auc_trace[0], best, 1e-12) << c.name;

    PdcConfig parallel = cfg;
    parallel.jobs = 3;
    const InstructionSet again = GreedySelect(pool, w.index, positives, parallel);
    EXPECT_EQ(ToJson(again, w.ds).dump(), ToJson(set, w.ds).dump());
  }
}

TEST(Greedy, MergeIgnoresDominatedLists) {
  // Adding a list with no new images and no higher scores leaves the
  // max-merged result unchanged, so the set score cannot move.
  Rng rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> scores(30);
    for (double& s : scores) s = UniformUnit(rng);
    RankedList base;
    for (ItemId id : testing::ArgsortDescending(scores)) base.items.push_back({id, scores[id]});
    RankedList dominated;
    for (const ScoredItem& s : base.items) {
      if (UniformUnit(rng) < 0.5) dominated.items.push_back({s.item_id, s.score * UniformUnit(rng)});
    }
    std::sort(dominated.items.begin(), dominated.items.end(), [](const auto& a, const auto& b) {
      return a.score != b.score ? a.score > b.score : a.item_id < b.item_id;
    });
    const std::vector<RankedList> lists{base, dominated};
    EXPECT_EQ(MergeResults(lists, MergeMode::kMax, 1000), base);
  }
}

}  // namespace
}  // namespace lig
