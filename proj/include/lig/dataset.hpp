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

// Annotated-dataset model, embedding bundles, fold splits and per-class
// candidate pools.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lig/binary_io.hpp"
#include "lig/fusion.hpp"
#include "lig/index.hpp"

namespace lig {

using ClassId = std::int64_t;

struct ImageRecord {
  ImageId id = 0;
  int width = 0;
  int height = 0;
  std::string file_name;
};

struct BBox {
  BBoxId id = 0;
  ImageId image_id = 0;
  ClassId class_id = 0;
  double x = 0, y = 0, w = 0, h = 0;  // pixels

  double area() const { return w * h; }
};

struct ClassInfo {
  ClassId id = 0;
  std::string name;                // canonical name
  std::vector<std::string> words;  // always contains `name`, first
};

enum class AnnotationFormat { kCocoJson, kSimpleJson };

std::optional<AnnotationFormat> ParseAnnotationFormat(std::string_view name);

class AnnotatedDataset {
 public:
  AnnotatedDataset() = default;

  // Validates referential integrity and box bounds; throws kDanglingReference
  // or kOutOfBoundsBBox. The canonical name is added to a class's word list
  // when missing.
  static AnnotatedDataset Create(std::vector<ImageRecord> images, std::vector<BBox> boxes,
                                 std::vector<ClassInfo> classes);

  const std::vector<ImageRecord>& images() const { return images_; }
  const std::vector<BBox>& boxes() const { return boxes_; }
  const std::vector<ClassInfo>& classes() const { return classes_; }

  std::vector<ImageId> image_ids() const;  // ascending
  const ImageRecord* FindImage(ImageId id) const;
  const BBox* FindBox(BBoxId id) const;
  const ClassInfo* FindClass(ClassId id) const;
  const ClassInfo& GetClass(ClassId id) const;  // throws kDanglingReference
  std::vector<const BBox*> BoxesOf(ImageId image) const;

  // Images of `subset` that contain at least one box of the class, ascending.
  std::vector<ImageId> ImagesWithClass(ClassId cls, std::span<const ImageId> subset) const;

  // Fold bookkeeping; empty until SplitFolds has run.
  int num_folds() const { return num_folds_; }
  const std::map<ImageId, int>& fold_of() const { return fold_of_; }
  std::vector<ImageId> TestImages(int fold) const;
  std::vector<ImageId> TrainImages(int fold) const;
  void SetFolds(int num_folds, std::map<ImageId, int> fold_of);

 private:
  std::vector<ImageRecord> images_;  // sorted by id
  std::vector<BBox> boxes_;          // sorted by id
  std::vector<ClassInfo> classes_;   // sorted by id
  std::map<ImageId, std::vector<std::size_t>> boxes_by_image_;
  int num_folds_ = 0;
  std::map<ImageId, int> fold_of_;
};

AnnotatedDataset ParseAnnotations(std::string_view json_text, AnnotationFormat format);
AnnotatedDataset LoadAnnotations(const std::filesystem::path& path, AnnotationFormat format);
// Writes the simple_json schema; `info` is stored verbatim under "info".
std::string ToSimpleJson(const AnnotatedDataset& ds, std::string_view info = {});

// Seeded partition of images into n_folds groups whose sizes differ by at
// most one. Throws kTooFewImages when there are fewer images than folds.
AnnotatedDataset SplitFolds(const AnnotatedDataset& ds, int n_folds, std::uint64_t seed);

inline constexpr std::string_view kDefaultPromptTemplate = "a photo of {}";
// Replaces the first "{}" of the template with the word.
std::string RenderPrompt(std::string_view prompt_template, std::string_view word);

struct EmbeddingBundle {
  std::size_t dimension = 0;
  std::vector<PatchKey> patch_keys;  // grid patches
  std::vector<float> patch_data;     // row-major, patch_keys.size() x dimension
  std::map<BBoxId, Embedding> bbox_embeddings;
  std::map<std::string, Embedding> text_embeddings;  // keyed by rendered prompt
  std::string metadata;

  EmbeddingView patch(std::size_t i) const {
    return EmbeddingView(patch_data).subspan(i * dimension, dimension);
  }
  void AddPatch(const PatchKey& key, EmbeddingView v);
  const Embedding* FindBox(BBoxId id) const;
  const Embedding* FindText(std::string_view prompt) const;

  // Grid patches of the given images, in stored order.
  void CollectPatches(std::span<const ImageId> images, std::vector<PatchKey>& keys,
                      std::vector<float>& data) const;

  Bytes Serialize() const;
  static EmbeddingBundle Deserialize(std::span<const std::uint8_t> file);
  void Save(const std::filesystem::path& path) const;
  static EmbeddingBundle Read(const std::filesystem::path& path);
};

struct BundleExpectations {
  std::optional<std::size_t> dimension;
  std::string prompt_template = std::string(kDefaultPromptTemplate);
};

// Checks the bundle against the dataset: all 165 grid patches per image, one
// crop per box, one prompt per word. Throws kMissingEmbedding naming the first
// gap, or kDimensionMismatch.
void ValidateBundle(const EmbeddingBundle& bundle, const AnnotatedDataset& ds,
                    const BundleExpectations& expect);
EmbeddingBundle LoadEmbeddings(const std::filesystem::path& path, const AnnotatedDataset& ds,
                               const BundleExpectations& expect);

// Builds a flat index over the grid patches of `images`.
VectorIndex BuildImageIndex(const EmbeddingBundle& bundle, std::span<const ImageId> images,
                            const IndexBuildOptions& options);

struct VisualCandidate {
  ImageId image_id = 0;
  BBoxId bbox_id = 0;
  Embedding embedding;
};

struct TextCandidate {
  std::string word;
  std::string prompt;
  Embedding embedding;
};

struct CandidatePool {
  ClassId class_id = 0;
  std::string class_name;
  std::vector<VisualCandidate> visuals;  // one per train image, ascending image id
  std::vector<TextCandidate> texts;      // word-list order
};

// Largest box of the class per train image (ties: lowest box id) plus every
// word's prompt embedding. Throws kClassAbsentFromTrainSplit.
CandidatePool BuildCandidatePool(const AnnotatedDataset& ds, const EmbeddingBundle& bundle,
                                 ClassId cls, std::span<const ImageId> train_images,
                                 std::string_view prompt_template = kDefaultPromptTemplate);

}  // namespace lig
