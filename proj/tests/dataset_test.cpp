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

#include "lig/dataset.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include "lig/binary_io.hpp"
#include "lig/error.hpp"
#include "lig/metrics.hpp"
#include "lig/synth.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace lig {
namespace {

using testing::CodeOf;

constexpr std::string_view kSimple = R"({
  "images": [{"id": 1, "width": 100, "height": 80}, {"id": 2, "width": 50, "height": 50}],
  "classes": [{"id": 3, "name": "dog", "words": ["dog", "puppy"]},
              {"id": 4, "name": "cat"}],
  "boxes": [{"id": 10, "image_id": 1, "class_id": 3, "xywh": [0, 0, 10, 10]},
            {"id": 11, "image_id": 1, "class_id": 3, "xywh": [10, 10, 20, 20]},
            {"id": 12, "image_id": 2, "class_id": 4, "xywh": [5, 5, 40, 40]}]
})";

constexpr std::string_view kCoco = R"({
  "images": [{"id": 1, "width": 100, "height": 80, "file_name": "a.jpg"}],
  "categories": [{"id": 3, "name": "dog", "words": ["dog", "hound"]}, {"id": 4, "name": "cat"}],
  "annotations": [{"id": 10, "image_id": 1, "category_id": 3, "bbox": [1, 2, 30, 40]}]
})";

TEST(Annotations, ParseSimpleJson) {
  const AnnotatedDataset ds = ParseAnnotations(kSimple, AnnotationFormat::kSimpleJson);
  EXPECT_EQ(ds.images().size(), 2u);
  EXPECT_EQ(ds.boxes().size(), 3u);
  ASSERT_EQ(ds.classes().size(), 2u);
  EXPECT_EQ(ds.GetClass(3).words, (std::vector<std::string>{"dog", "puppy"}));
  EXPECT_EQ(ds.GetClass(4).words, (std::vector<std::string>{"cat"}));
  EXPECT_EQ(ds.BoxesOf(1).size(), 2u);
  const std::vector<ImageId> all = ds.image_ids();
  EXPECT_EQ(ds.ImagesWithClass(3, all), (std::vector<ImageId>{1}));
  EXPECT_EQ(ds.ImagesWithClass(4, all), (std::vector<ImageId>{2}));
}

TEST(Annotations, ParseCocoJson) {
  const AnnotatedDataset ds = ParseAnnotations(kCoco, AnnotationFormat::kCocoJson);
  ASSERT_EQ(ds.boxes().size(), 1u);
  const BBox& b = ds.boxes()[0];
  EXPECT_EQ(b.class_id, 3);
  EXPECT_DOUBLE_EQ(b.x, 1);
  EXPECT_DOUBLE_EQ(b.h, 40);
  EXPECT_EQ(ds.GetClass(3).words, (std::vector<std::string>{"dog", "hound"}));
  EXPECT_EQ(ds.FindImage(1)->file_name, "a.jpg");
}

TEST(Annotations, SimpleJsonRoundTrip) {
  const AnnotatedDataset ds = ParseAnnotations(kSimple, AnnotationFormat::kSimpleJson);
  const std::string text = ToSimpleJson(ds, R"({"seed": 3})");
  const AnnotatedDataset back = ParseAnnotations(text, AnnotationFormat::kSimpleJson);
  EXPECT_EQ(ToSimpleJson(back, R"({"seed": 3})"), text);
  EXPECT_NE(text.find("\"seed\""), std::string::npos);
}

TEST(Annotations, Errors) {
  EXPECT_EQ(CodeOf([] { ParseAnnotations("{not json", AnnotationFormat::kSimpleJson); }),
            ErrorCode::kParseError);
  EXPECT_EQ(CodeOf([] {
              ParseAnnotations(R"({"images": [], "classes": [], "boxes": [
                {"id": 1, "image_id": 9, "class_id": 1, "xywh": [0, 0, 1, 1]}]})",
                               AnnotationFormat::kSimpleJson);
            }),
            ErrorCode::kDanglingReference);
  EXPECT_EQ(CodeOf([] {
              ParseAnnotations(R"({"images": [{"id": 1, "width": 10, "height": 10}],
                "classes": [{"id": 1, "name": "x"}],
                "boxes": [{"id": 1, "image_id": 1, "class_id": 1, "xywh": [5, 5, 6, 2]}]})",
                               AnnotationFormat::kSimpleJson);
            }),
            ErrorCode::kOutOfBoundsBBox);
  EXPECT_EQ(CodeOf([] {
              ParseAnnotations(R"({"images": [{"id": 1, "width": 10, "height": 10}],
                "classes": [{"id": 1, "name": "x"}],
                "boxes": [{"id": 1, "image_id": 1, "class_id": 2, "xywh": [0, 0, 1, 1]}]})",
                               AnnotationFormat::kSimpleJson);
            }),
            ErrorCode::kDanglingReference);
  EXPECT_EQ(CodeOf([] { LoadAnnotations("/nonexistent.json", AnnotationFormat::kCocoJson); }),
            ErrorCode::kIoError);
  EXPECT_FALSE(ParseAnnotationFormat("yaml").has_value());
}

AnnotatedDataset ManyImages(int n) {
  std::vector<ImageRecord> images;
  for (int i = 1; i <= n; ++i) images.push_back({i, 10, 10, ""});
  return AnnotatedDataset::Create(images, {}, {{1, "x", {"x"}}});
}

TEST(Folds, TenImagesFiveFolds) {
  const AnnotatedDataset ds = SplitFolds(ManyImages(10), 5, 0);
  ASSERT_EQ(ds.num_folds(), 5);
  for (int f = 0; f < 5; ++f) {
    EXPECT_EQ(ds.TestImages(f).size(), 2u);
    EXPECT_EQ(ds.TrainImages(f).size(), 8u);
  }
}

TEST(Folds, PartitionPropertyAndDeterminism) {
  for (int n : {7, 23, 200}) {
    for (int folds : {2, 3, 5}) {
      const AnnotatedDataset a = SplitFolds(ManyImages(n), folds, 42);
      const AnnotatedDataset b = SplitFolds(ManyImages(n), folds, 42);
      EXPECT_EQ(a.fold_of(), b.fold_of());
      std::set<ImageId> seen;
      std::size_t lo = n, hi = 0;
      for (int f = 0; f < folds; ++f) {
        const auto test = a.TestImages(f);
        lo = std::min(lo, test.size());
        hi = std::max(hi, test.size());
        for (ImageId id : test) EXPECT_TRUE(seen.insert(id).second);
        const auto train_list = a.TrainImages(f);
        std::set<ImageId> train(train_list.begin(), train_list.end());
        for (ImageId id : test) EXPECT_EQ(train.count(id), 0u);
        EXPECT_EQ(train.size() + test.size(), static_cast<std::size_t>(n));
      }
      EXPECT_EQ(seen.size(), static_cast<std::size_t>(n));
      EXPECT_LE(hi - lo, 1u);
    }
  }
  EXPECT_NE(SplitFolds(ManyImages(50), 5, 1).fold_of(), SplitFolds(ManyImages(50), 5, 2).fold_of());
}

TEST(Folds, Errors) {
  EXPECT_EQ(CodeOf([] { SplitFolds(ManyImages(3), 5, 0); }), ErrorCode::kTooFewImages);
  EXPECT_EQ(CodeOf([] { SplitFolds(ManyImages(3), 1, 0); }), ErrorCode::kInvalidConfig);
}

TEST(Prompt, Render) {
  EXPECT_EQ(RenderPrompt(kDefaultPromptTemplate, "dog"), "a photo of dog");
  EXPECT_EQ(RenderPrompt("{} in the wild", "cat"), "cat in the wild");
}

// Minimal world: two images with full grids, a few boxes and all prompts.
struct Tiny {
  AnnotatedDataset ds;
  EmbeddingBundle bundle;
};

Tiny MakeTiny() {
  Tiny t;
  t.ds = ParseAnnotations(kSimple, AnnotationFormat::kSimpleJson);
  Rng rng(1);
  t.bundle.dimension = 8;
  for (ImageId img : {1, 2}) {
    for (const PatchKey& k : GridKeysForImage(img)) t.bundle.AddPatch(k, testing::RandomUnit(rng, 8));
  }
  for (BBoxId b : {10, 11, 12}) t.bundle.bbox_embeddings[b] = testing::RandomUnit(rng, 8);
  for (const char* w : {"dog", "puppy", "cat"}) {
    t.bundle.text_embeddings[RenderPrompt(kDefaultPromptTemplate, w)] = testing::RandomUnit(rng, 8);
  }
  t.bundle.metadata = "tiny";
  return t;
}

TEST(Bundle, RoundTripBitExact) {
  const Tiny t = MakeTiny();
  const Bytes bytes = t.bundle.Serialize();
  const EmbeddingBundle back = EmbeddingBundle::Deserialize(bytes);
  EXPECT_EQ(back.dimension, 8u);
  EXPECT_EQ(back.patch_keys, t.bundle.patch_keys);
  EXPECT_EQ(back.patch_data, t.bundle.patch_data);
  EXPECT_EQ(back.bbox_embeddings, t.bundle.bbox_embeddings);
  EXPECT_EQ(back.text_embeddings, t.bundle.text_embeddings);
  EXPECT_EQ(back.metadata, "tiny");
  EXPECT_EQ(back.Serialize(), bytes);
  EXPECT_NO_THROW(ValidateBundle(back, t.ds, {}));
}

TEST(Bundle, DocumentedLayout) {
  // Header: "LIGE", version 1, then dimension and the metadata string.
  const Tiny t = MakeTiny();
  const Bytes bytes = t.bundle.Serialize();
  ASSERT_GT(bytes.size(), 40u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "LIGE");
  ByteReader r{std::span<const std::uint8_t>(bytes).subspan(4)};
  EXPECT_EQ(r.U32(), 1u);
  EXPECT_EQ(r.U32(), 8u);
  EXPECT_EQ(r.String(), "tiny");
  EXPECT_EQ(r.U64(), 330u);
  EXPECT_EQ(r.U64(), 3u);
  EXPECT_EQ(r.U64(), 3u);
  // First patch key: image 1, grid 1, cell (0,0), bbox -1.
  EXPECT_EQ(r.I64(), 1);
  EXPECT_EQ(r.U8(), 1);
  EXPECT_EQ(r.U8(), 0);
  EXPECT_EQ(r.U8(), 0);
  EXPECT_EQ(r.I64(), -1);
  // Payload ends 4 bytes before the CRC trailer; the CRC covers everything
  // before it.
  const std::uint32_t stored = bytes[bytes.size() - 4] | (bytes[bytes.size() - 3] << 8) |
                               (bytes[bytes.size() - 2] << 16) |
                               (static_cast<std::uint32_t>(bytes[bytes.size() - 1]) << 24);
  EXPECT_EQ(stored, Crc32(std::span(bytes).first(bytes.size() - 4)));
}

TEST(Bundle, CorruptionAndVersion) {
  const Bytes good = MakeTiny().bundle.Serialize();
  Bytes bad = good;
  bad[bad.size() / 3] ^= 1;
  EXPECT_EQ(CodeOf([&] { EmbeddingBundle::Deserialize(bad); }), ErrorCode::kChecksumMismatch);
  Bytes magic = good;
  magic[1] = 'X';
  EXPECT_EQ(CodeOf([&] { EmbeddingBundle::Deserialize(magic); }), ErrorCode::kFormatVersionMismatch);
  Bytes version = good;
  version[4] = 2;
  EXPECT_EQ(CodeOf([&] { EmbeddingBundle::Deserialize(version); }), ErrorCode::kFormatVersionMismatch);
  Bytes cut(good.begin(), good.end() - 10);
  EXPECT_EQ(CodeOf([&] { EmbeddingBundle::Deserialize(cut); }), ErrorCode::kChecksumMismatch);
}

TEST(Bundle, ValidationNamesTheGap) {
  {
    Tiny t = MakeTiny();
    t.bundle.bbox_embeddings.erase(11);
    try {
      ValidateBundle(t.bundle, t.ds, {});
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kMissingEmbedding);
      EXPECT_NE(std::string(e.what()).find("11"), std::string::npos);
    }
  }
  {
    Tiny t = MakeTiny();
    t.bundle.text_embeddings.erase("a photo of puppy");
    try {
      ValidateBundle(t.bundle, t.ds, {});
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kMissingEmbedding);
      EXPECT_NE(std::string(e.what()).find("puppy"), std::string::npos);
    }
  }
  {
    Tiny t = MakeTiny();
    t.bundle.patch_keys.pop_back();
    t.bundle.patch_data.resize(t.bundle.patch_keys.size() * 8);
    EXPECT_EQ(CodeOf([&] { ValidateBundle(t.bundle, t.ds, {}); }), ErrorCode::kMissingEmbedding);
  }
  {
    Tiny t = MakeTiny();
    BundleExpectations expect;
    expect.dimension = 16;
    EXPECT_EQ(CodeOf([&] { ValidateBundle(t.bundle, t.ds, expect); }), ErrorCode::kDimensionMismatch);
  }
  {
    Tiny t = MakeTiny();
    BundleExpectations expect;
    expect.prompt_template = "{}";
    EXPECT_EQ(CodeOf([&] { ValidateBundle(t.bundle, t.ds, expect); }), ErrorCode::kMissingEmbedding);
  }
}

TEST(CandidatePool, LargestBoxPerImage) {
  const Tiny t = MakeTiny();
  const std::vector<ImageId> train{1, 2};
  const CandidatePool pool = BuildCandidatePool(t.ds, t.bundle, 3, train);
  ASSERT_EQ(pool.visuals.size(), 1u);
  EXPECT_EQ(pool.visuals[0].bbox_id, 11);  // 400 px beats 100 px
  EXPECT_EQ(pool.visuals[0].embedding, t.bundle.bbox_embeddings.at(11));
  ASSERT_EQ(pool.texts.size(), 2u);
  EXPECT_EQ(pool.texts[0].word, "dog");
  EXPECT_EQ(pool.texts[1].prompt, "a photo of puppy");
  EXPECT_EQ(CodeOf([&] { BuildCandidatePool(t.ds, t.bundle, 4, std::vector<ImageId>{1}); }),
            ErrorCode::kClassAbsentFromTrainSplit);
}

TEST(CandidatePool, AreaTieGoesToLowestId) {
  const AnnotatedDataset ds = ParseAnnotations(R"({
    "images": [{"id": 1, "width": 100, "height": 100}],
    "classes": [{"id": 1, "name": "x"}],
    "boxes": [{"id": 7, "image_id": 1, "class_id": 1, "xywh": [0, 0, 10, 20]},
              {"id": 5, "image_id": 1, "class_id": 1, "xywh": [50, 50, 20, 10]}]})",
                                               AnnotationFormat::kSimpleJson);
  EmbeddingBundle b;
  b.dimension = 2;
  b.bbox_embeddings[5] = {1, 0};
  b.bbox_embeddings[7] = {0, 1};
  b.text_embeddings["a photo of x"] = {1, 1};
  const CandidatePool pool = BuildCandidatePool(ds, b, 1, std::vector<ImageId>{1});
  ASSERT_EQ(pool.visuals.size(), 1u);
  EXPECT_EQ(pool.visuals[0].bbox_id, 5);
}

TEST(CandidatePool, CrossProductSize) {
  // 3 words x 5 train images.
  std::string doc = R"({"images": [)";
  for (int i = 1; i <= 5; ++i) doc += (i > 1 ? "," : "") + std::string(R"({"id": )") + std::to_string(i) + R"(, "width": 10, "height": 10})";
  doc += R"(], "classes": [{"id": 1, "name": "a", "words": ["a", "b", "c"]}], "boxes": [)";
  for (int i = 1; i <= 5; ++i) doc += (i > 1 ? "," : "") + std::string(R"({"id": )") + std::to_string(i) + R"(, "image_id": )" + std::to_string(i) + R"(, "class_id": 1, "xywh": [0, 0, 5, 5]})";
  doc += "]}";
  const AnnotatedDataset ds = ParseAnnotations(doc, AnnotationFormat::kSimpleJson);
  EmbeddingBundle b;
  b.dimension = 2;
  for (BBoxId i = 1; i <= 5; ++i) b.bbox_embeddings[i] = {1, 0};
  for (const char* w : {"a", "b", "c"}) b.text_embeddings[RenderPrompt(kDefaultPromptTemplate, w)] = {0, 1};
  const CandidatePool pool = BuildCandidatePool(ds, b, 1, ds.image_ids());
  EXPECT_EQ(pool.texts.size() * pool.visuals.size(), 15u);
}

TEST(Synth, SameSeedIsByteIdentical) {
  SynthConfig cfg;
  cfg.images_per_class = 5;
  const SynthWorld a = SynthGenerate(cfg);
  const SynthWorld b = SynthGenerate(cfg);
  EXPECT_EQ(a.bundle.Serialize(), b.bundle.Serialize());
  EXPECT_EQ(ToSimpleJson(a.dataset), ToSimpleJson(b.dataset));
  cfg.seed = 1;
  EXPECT_NE(SynthGenerate(cfg).bundle.Serialize(), a.bundle.Serialize());
}

TEST(Synth, OutputsAreValid) {
  SynthConfig cfg;
  cfg.images_per_class = 6;
  const SynthWorld w = SynthGenerate(cfg);
  EXPECT_EQ(w.dataset.images().size(), 24u);
  EXPECT_EQ(w.dataset.classes().size(), 4u);
  EXPECT_NO_THROW(ValidateBundle(w.bundle, w.dataset, {}));
  for (std::size_t i = 0; i < w.bundle.patch_keys.size(); ++i) {
    EXPECT_NEAR(L2Norm(w.bundle.patch(i)), 1.0, 1e-5);
  }
  // Ground-truth centers are orthonormal.
  for (std::size_t i = 0; i < w.centers.size(); ++i) {
    for (std::size_t j = 0; j < w.centers.size(); ++j) {
      EXPECT_NEAR(Dot(w.centers[i], w.centers[j]), i == j ? 1.0 : 0.0, 1e-5);
    }
  }
  // The bundle and annotations survive their file formats.
  const auto dir = testing::TempDir("synth_files");
  w.bundle.Save(dir / "e.bin");
  WriteFileText(dir / "a.json", ToSimpleJson(w.dataset));
  const AnnotatedDataset ds = LoadAnnotations(dir / "a.json", AnnotationFormat::kSimpleJson);
  EXPECT_NO_THROW(LoadEmbeddings(dir / "e.bin", ds, {}));
}

TEST(Synth, Errors) {
  SynthConfig cfg;
  cfg.n_classes = 1;
  EXPECT_EQ(CodeOf([&] { SynthGenerate(cfg); }), ErrorCode::kInvalidConfig);
  cfg = SynthConfig{};
  cfg.dimension = 4;
  EXPECT_EQ(CodeOf([&] { SynthGenerate(cfg); }), ErrorCode::kInvalidConfig);
  EXPECT_EQ(CodeOf([] { SynthConfigFromJson(nlohmann::json{{"bogus", 1}}); }),
            ErrorCode::kInvalidConfig);
}

TEST(Synth, ZeroNoiseIsSeparable) {
  // Every class's prompt puts exactly its own images first, each at score 1.
  SynthConfig cfg;
  cfg.noise_sigma = 0.0;
  cfg.images_per_class = 10;
  const SynthWorld w = SynthGenerate(cfg);
  const VectorIndex index = BuildImageIndex(w.bundle, w.dataset.image_ids(), {});
  for (const ClassInfo& c : w.dataset.classes()) {
    const auto positives = w.dataset.ImagesWithClass(c.id, w.dataset.image_ids());
    const Embedding& q = *w.bundle.FindText(RenderPrompt(cfg.prompt_template, c.name));
    const RankedList ranked = index.SearchExact(q, 1000).ranked;
    ASSERT_GT(ranked.size(), positives.size());
    const std::set<ImageId> pos(positives.begin(), positives.end());
    for (std::size_t r = 0; r < positives.size(); ++r) {
      EXPECT_TRUE(pos.count(ranked[r].item_id)) << c.name << " rank " << r;
      EXPECT_NEAR(ranked[r].score, 1.0, 1e-6);
    }
    EXPECT_LT(ranked[positives.size()].score, 1.0 - 1e-3);
    EXPECT_DOUBLE_EQ(AveragePrecisionAtK(ranked, positives, 1000), 1.0);
  }
}

// Default world, canonical prompt per class: AP@50 from a brute-force scan of
// every patch, frozen from a reference run.
TEST(Synth, DefaultWorldTextQueryApIsFrozen) {
  const std::vector<double> frozen = {0.4891, 0.5063, 0.3644, 0.4332};
  const SynthWorld w = SynthGenerate(SynthConfig{});
  const VectorIndex index = BuildImageIndex(w.bundle, w.dataset.image_ids(), {});
  std::size_t i = 0;
  for (const ClassInfo& c : w.dataset.classes()) {
    const Embedding& q = *w.bundle.FindText(RenderPrompt(SynthConfig{}.prompt_template, c.name));
    std::map<ImageId, double> best;
    for (std::size_t r = 0; r < w.bundle.patch_keys.size(); ++r) {
      const auto v = w.bundle.patch(r);
      double dot = 0.0, qq = 0.0, vv = 0.0;
      for (std::size_t j = 0; j < q.size(); ++j) {
        dot += double(q[j]) * v[j];
        qq += double(q[j]) * q[j];
        vv += double(v[j]) * v[j];
      }
      const double s = dot / std::sqrt(qq * vv);
      const ImageId id = w.bundle.patch_keys[r].image_id;
      if (!best.count(id) || s > best[id]) best[id] = s;
    }
    const auto positives = w.dataset.ImagesWithClass(c.id, w.dataset.image_ids());
    const double ap = testing::OracleAp(testing::OrderByScore(best),
                                        std::set<ImageId>(positives.begin(), positives.end()), 50);
    EXPECT_NEAR(AveragePrecisionAtK(index.SearchExact(q, 50).ranked, positives, 50), ap, 1e-9) << c.name;
    ASSERT_LT(i, frozen.size());
    EXPECT_NEAR(ap, frozen[i++], 1e-3) << c.name;
  }
}

TEST(Synth, ConfigJsonRoundTrip) {
  SynthConfig cfg = *SynthPreset("text_ambiguous");
  cfg.seed = 17;
  const SynthConfig back = SynthConfigFromJson(ToJson(cfg));
  EXPECT_EQ(ToJson(back), ToJson(cfg));
  EXPECT_FALSE(SynthPreset("nope").has_value());
}

}  // namespace
}  // namespace lig
