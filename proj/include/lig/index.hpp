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

// Clustered (inverted-file) cosine index over patch embeddings. Records are
// grouped under k-means centroids; a query visits the `nprobe` closest lists,
// scores every record there, and reduces patch scores to one score per image
// by taking the max.

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lig/binary_io.hpp"
#include "lig/fusion.hpp"

namespace lig {

using ImageId = ItemId;
using BBoxId = std::int64_t;

inline constexpr std::array<int, 5> kGridSizes = {1, 3, 5, 7, 9};
// 1 + 9 + 25 + 49 + 81 grid cells per image; g = 1 is the whole image.
inline constexpr std::size_t kPatchesPerImage = 165;
inline constexpr std::uint8_t kBBoxGrid = 0;

struct PatchKey {
  ImageId image_id = 0;
  std::uint8_t grid = 1;  // kBBoxGrid for bounding-box crops
  std::uint8_t row = 0;
  std::uint8_t col = 0;
  BBoxId bbox_id = -1;  // set iff grid == kBBoxGrid

  static PatchKey Grid(ImageId image, int grid, int row, int col);
  static PatchKey BBox(ImageId image, BBoxId bbox);

  bool is_bbox() const { return grid == kBBoxGrid; }
  bool IsValid() const;
  std::string ToString() const;

  friend auto operator<=>(const PatchKey&, const PatchKey&) = default;
};

// All 165 grid keys of one image in canonical order (grid, row, col).
std::vector<PatchKey> GridKeysForImage(ImageId image);

struct IndexBuildOptions {
  std::size_t num_clusters = 0;  // 0 picks ceil(sqrt(N)) clamped to [1, 4096]
  std::uint64_t seed = 0;
  int max_iterations = 25;
  double tolerance = 1e-4;  // stop when every centroid moves less than this
  // Points sampled for training per centroid; 0 trains on everything.
  std::size_t training_points_per_centroid = 256;
  std::size_t jobs = 1;
};

std::size_t DefaultNumClusters(std::size_t num_records);

struct SearchResult {
  RankedList ranked;  // image ids
  std::map<ImageId, PatchKey> best_patch;
};

class VectorIndex {
 public:
  VectorIndex() = default;

  // `data` is row-major, keys.size() rows of `dimension` floats.
  static VectorIndex Build(std::span<const PatchKey> keys, std::span<const float> data,
                           std::size_t dimension, const IndexBuildOptions& options);
  static VectorIndex Build(const std::vector<std::pair<PatchKey, Embedding>>& records,
                           const IndexBuildOptions& options);

  // Approximate search visiting the nprobe nearest lists. nprobe larger than
  // the list count is clamped; nprobe == num_clusters() is exact.
  SearchResult Search(EmbeddingView query, std::size_t k, std::size_t nprobe) const;
  SearchResult SearchExact(EmbeddingView query, std::size_t k) const;

  Bytes Serialize() const;
  static VectorIndex Deserialize(std::span<const std::uint8_t> file);
  void Save(const std::filesystem::path& path) const;
  static VectorIndex Load(const std::filesystem::path& path);

  std::size_t dimension() const { return dimension_; }
  std::size_t size() const { return keys_.size(); }
  bool empty() const { return keys_.empty(); }
  std::size_t num_clusters() const { return lists_.size(); }
  std::size_t num_images() const { return image_ids_.size(); }

  const PatchKey& key(std::size_t record) const { return keys_[record]; }
  EmbeddingView vector(std::size_t record) const;  // unit-normalized
  float norm(std::size_t record) const { return norms_[record]; }
  EmbeddingView centroid(std::size_t c) const;
  const std::vector<std::uint32_t>& list(std::size_t c) const { return lists_[c]; }
  const std::vector<ImageId>& image_ids() const { return image_ids_; }

  // Free-form text stored with the file (the CLI keeps its config here).
  const std::string& metadata() const { return metadata_; }
  void set_metadata(std::string metadata) { metadata_ = std::move(metadata); }

  // Partition and bookkeeping checks; used by tests.
  bool CheckInvariants() const;

 private:
  SearchResult Scan(EmbeddingView query, std::size_t k,
                    std::span<const std::uint32_t> clusters) const;
  void IndexImages();

  std::size_t dimension_ = 0;
  std::vector<float> data_;   // normalized records
  std::vector<float> norms_;  // original L2 norms
  std::vector<PatchKey> keys_;
  std::vector<float> centroids_;
  std::vector<std::vector<std::uint32_t>> lists_;
  std::vector<std::uint32_t> assignment_;
  std::vector<ImageId> image_ids_;            // sorted unique
  std::vector<std::uint32_t> image_of_record_;  // index into image_ids_
  std::string metadata_;
};

}  // namespace lig
