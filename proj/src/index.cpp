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

#include "lig/index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "lig/error.hpp"
#include "lig/parallel.hpp"
#include "lig/random.hpp"

namespace lig {
namespace {

constexpr std::string_view kIndexMagic = "LIGX";
constexpr std::uint32_t kIndexVersion = 1;

// Dot product of a float row against a double query, accumulated in double.
inline double RowDot(const float* row, const double* q, std::size_t dim) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= dim; i += 4) {
    s0 += static_cast<double>(row[i]) * q[i];
    s1 += static_cast<double>(row[i + 1]) * q[i + 1];
    s2 += static_cast<double>(row[i + 2]) * q[i + 2];
    s3 += static_cast<double>(row[i + 3]) * q[i + 3];
  }
  for (; i < dim; ++i) s0 += static_cast<double>(row[i]) * q[i];
  return (s0 + s1) + (s2 + s3);
}

std::vector<double> UnitQuery(EmbeddingView query) {
  const double norm = L2Norm(query);
  if (!(norm >= kZeroNormThreshold)) throw Error(ErrorCode::kZeroVector, "query vector is zero");
  std::vector<double> q(query.size());
  for (std::size_t i = 0; i < q.size(); ++i) q[i] = static_cast<double>(query[i]) / norm;
  return q;
}

// Single-precision dot for centroid assignment, where only the argmax matters.
inline float FloatDot(const float* a, const float* b, std::size_t dim) {
  float acc[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  std::size_t i = 0;
  for (; i + 8 <= dim; i += 8) {
    for (std::size_t j = 0; j < 8; ++j) acc[j] += a[i + j] * b[i + j];
  }
  for (; i < dim; ++i) acc[0] += a[i] * b[i];
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
}

std::size_t Nearest(const float* row, const std::vector<float>& centroids, std::size_t k,
                    std::size_t dim) {
  std::size_t best = 0;
  float best_score = -std::numeric_limits<float>::infinity();
  for (std::size_t c = 0; c < k; ++c) {
    const float s = FloatDot(&centroids[c * dim], row, dim);
    if (s > best_score) {
      best_score = s;
      best = c;
    }
  }
  return best;
}

// Spherical k-means: k-means++ seeding on unit vectors, Lloyd iterations with
// re-normalized centroids.
std::vector<float> TrainCentroids(const std::vector<float>& data, std::size_t n, std::size_t dim,
                                  std::size_t k, const IndexBuildOptions& opt) {
  Rng rng(opt.seed);
  std::vector<std::size_t> train(n);
  std::iota(train.begin(), train.end(), 0);
  if (opt.training_points_per_centroid > 0 && n > opt.training_points_per_centroid * k) {
    train = SampleWithoutReplacement(rng, n, opt.training_points_per_centroid * k);
    std::sort(train.begin(), train.end());
  }
  const std::size_t m = train.size();
  auto row = [&](std::size_t t) { return &data[train[t] * dim]; };

  std::vector<float> centroids(k * dim);
  std::vector<double> d2(m, std::numeric_limits<double>::infinity());
  std::size_t pick = static_cast<std::size_t>(UniformIndex(rng, m));
  for (std::size_t c = 0; c < k; ++c) {
    std::copy(row(pick), row(pick) + dim, &centroids[c * dim]);
    if (c + 1 == k) break;
    std::vector<double> q(row(pick), row(pick) + dim);
    double total = 0.0;
    for (std::size_t t = 0; t < m; ++t) {
      const double d = std::max(0.0, 2.0 - 2.0 * RowDot(row(t), q.data(), dim));
      d2[t] = std::min(d2[t], d);
      total += d2[t];
    }
    if (total <= 0.0) {
      pick = (pick + 1) % m;
      continue;
    }
    double target = UniformUnit(rng) * total;
    pick = m - 1;
    for (std::size_t t = 0; t < m; ++t) {
      target -= d2[t];
      if (target < 0.0) {
        pick = t;
        break;
      }
    }
  }

  std::vector<std::size_t> assign(m);
  for (int iter = 0; iter < opt.max_iterations; ++iter) {
    ParallelFor(m, opt.jobs, [&](std::size_t t) { assign[t] = Nearest(row(t), centroids, k, dim); });
    std::vector<double> sums(k * dim, 0.0);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t t = 0; t < m; ++t) {
      const float* r = row(t);
      double* s = &sums[assign[t] * dim];
      for (std::size_t j = 0; j < dim; ++j) s[j] += r[j];
      ++counts[assign[t]];
    }
    double max_shift = 0.0;
    std::vector<bool> used(m, false);
    for (std::size_t c = 0; c < k; ++c) {
      std::vector<float> next(dim);
      double norm = 0.0;
      for (std::size_t j = 0; j < dim; ++j) norm += sums[c * dim + j] * sums[c * dim + j];
      norm = std::sqrt(norm);
      if (counts[c] == 0 || norm < kZeroNormThreshold) {
        // Re-seed an empty cluster with the training point worst served by
        // its current centroid.
        std::size_t worst = 0;
        double worst_score = std::numeric_limits<double>::infinity();
        for (std::size_t t = 0; t < m; ++t) {
          if (used[t]) continue;
          std::vector<double> q(row(t), row(t) + dim);
          const double s = RowDot(&centroids[assign[t] * dim], q.data(), dim);
          if (s < worst_score) {
            worst_score = s;
            worst = t;
          }
        }
        used[worst] = true;
        std::copy(row(worst), row(worst) + dim, next.begin());
      } else {
        for (std::size_t j = 0; j < dim; ++j) {
          next[j] = static_cast<float>(sums[c * dim + j] / norm);
        }
      }
      double shift = 0.0;
      for (std::size_t j = 0; j < dim; ++j) {
        const double d = static_cast<double>(next[j]) - centroids[c * dim + j];
        shift += d * d;
      }
      max_shift = std::max(max_shift, std::sqrt(shift));
      std::copy(next.begin(), next.end(), &centroids[c * dim]);
    }
    if (max_shift < opt.tolerance) break;
  }
  return centroids;
}

}  // namespace

PatchKey PatchKey::Grid(ImageId image, int grid, int row, int col) {
  PatchKey k;
  k.image_id = image;
  k.grid = static_cast<std::uint8_t>(grid);
  k.row = static_cast<std::uint8_t>(row);
  k.col = static_cast<std::uint8_t>(col);
  return k;
}

PatchKey PatchKey::BBox(ImageId image, BBoxId bbox) {
  PatchKey k;
  k.image_id = image;
  k.grid = kBBoxGrid;
  k.bbox_id = bbox;
  return k;
}

bool PatchKey::IsValid() const {
  if (is_bbox()) return bbox_id >= 0 && row == 0 && col == 0;
  return bbox_id == -1 && row < grid && col < grid;
}

std::string PatchKey::ToString() const {
  std::ostringstream os;
  os << "image " << image_id;
  if (is_bbox()) {
    os << " bbox " << bbox_id;
  } else {
    os << " grid " << int{grid} << " cell (" << int{row} << "," << int{col} << ")";
  }
  return os.str();
}

std::vector<PatchKey> GridKeysForImage(ImageId image) {
  std::vector<PatchKey> keys;
  keys.reserve(kPatchesPerImage);
  for (int g : kGridSizes) {
    for (int r = 0; r < g; ++r) {
      for (int c = 0; c < g; ++c) keys.push_back(PatchKey::Grid(image, g, r, c));
    }
  }
  return keys;
}

std::size_t DefaultNumClusters(std::size_t num_records) {
  const auto root = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(num_records))));
  return std::clamp<std::size_t>(root, 1, 4096);
}

VectorIndex VectorIndex::Build(std::span<const PatchKey> keys, std::span<const float> data,
                               std::size_t dimension, const IndexBuildOptions& options) {
  if (keys.empty()) throw Error(ErrorCode::kEmptyInput, "no records to index");
  if (dimension == 0 || data.size() != keys.size() * dimension) {
    throw Error(ErrorCode::kDimensionMismatch, "payload size does not match keys x dimension");
  }
  const std::size_t n = keys.size();
  const std::size_t k = options.num_clusters == 0 ? DefaultNumClusters(n) : options.num_clusters;
  if (k > n) {
    throw Error(ErrorCode::kInvalidArgument,
                "num_clusters " + std::to_string(k) + " exceeds record count " + std::to_string(n));
  }
  if (n > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(ErrorCode::kInvalidArgument, "too many records");
  }

  VectorIndex index;
  index.dimension_ = dimension;
  index.keys_.assign(keys.begin(), keys.end());
  index.data_.resize(data.size());
  index.norms_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const EmbeddingView row = data.subspan(i * dimension, dimension);
    const double norm = L2Norm(row);
    if (!(norm >= kZeroNormThreshold)) {
      throw Error(ErrorCode::kZeroVector, "record " + keys[i].ToString() + " is a zero vector");
    }
    index.norms_[i] = static_cast<float>(norm);
    for (std::size_t j = 0; j < dimension; ++j) {
      index.data_[i * dimension + j] = static_cast<float>(row[j] / norm);
    }
  }

  index.centroids_ = TrainCentroids(index.data_, n, dimension, k, options);
  index.assignment_.resize(n);
  ParallelFor(n, options.jobs, [&](std::size_t i) {
    index.assignment_[i] = static_cast<std::uint32_t>(
        Nearest(&index.data_[i * dimension], index.centroids_, k, dimension));
  });
  std::vector<std::vector<std::uint32_t>> members(k);
  for (std::size_t i = 0; i < n; ++i) members[index.assignment_[i]].push_back(static_cast<std::uint32_t>(i));

  // Records are stored list by list so that a probe reads contiguous memory.
  std::vector<PatchKey> keys_out;
  std::vector<float> data_out;
  std::vector<float> norms_out;
  std::vector<std::uint32_t> assign_out;
  keys_out.reserve(n);
  data_out.reserve(index.data_.size());
  norms_out.reserve(n);
  assign_out.reserve(n);
  index.lists_.assign(k, {});
  for (std::size_t c = 0; c < k; ++c) {
    for (std::uint32_t i : members[c]) {
      index.lists_[c].push_back(static_cast<std::uint32_t>(keys_out.size()));
      keys_out.push_back(index.keys_[i]);
      data_out.insert(data_out.end(), index.data_.begin() + static_cast<std::ptrdiff_t>(i * dimension),
                      index.data_.begin() + static_cast<std::ptrdiff_t>((i + 1) * dimension));
      norms_out.push_back(index.norms_[i]);
      assign_out.push_back(static_cast<std::uint32_t>(c));
    }
  }
  index.keys_ = std::move(keys_out);
  index.data_ = std::move(data_out);
  index.norms_ = std::move(norms_out);
  index.assignment_ = std::move(assign_out);
  index.IndexImages();
  return index;
}

VectorIndex VectorIndex::Build(const std::vector<std::pair<PatchKey, Embedding>>& records,
                               const IndexBuildOptions& options) {
  if (records.empty()) throw Error(ErrorCode::kEmptyInput, "no records to index");
  const std::size_t dim = records.front().second.size();
  std::vector<PatchKey> keys;
  std::vector<float> data;
  keys.reserve(records.size());
  data.reserve(records.size() * dim);
  for (const auto& [key, vec] : records) {
    if (vec.size() != dim) {
      throw Error(ErrorCode::kDimensionMismatch, "record " + key.ToString() + " has dimension " +
                                                     std::to_string(vec.size()) + ", expected " +
                                                     std::to_string(dim));
    }
    keys.push_back(key);
    data.insert(data.end(), vec.begin(), vec.end());
  }
  return Build(keys, data, dim, options);
}

void VectorIndex::IndexImages() {
  image_ids_.clear();
  for (const PatchKey& k : keys_) image_ids_.push_back(k.image_id);
  std::sort(image_ids_.begin(), image_ids_.end());
  image_ids_.erase(std::unique(image_ids_.begin(), image_ids_.end()), image_ids_.end());
  image_of_record_.resize(keys_.size());
  for (std::size_t i = 0; i < keys_.size(); ++i) {
    const auto it = std::lower_bound(image_ids_.begin(), image_ids_.end(), keys_[i].image_id);
    image_of_record_[i] = static_cast<std::uint32_t>(it - image_ids_.begin());
  }
}

EmbeddingView VectorIndex::vector(std::size_t record) const {
  return EmbeddingView(data_).subspan(record * dimension_, dimension_);
}

EmbeddingView VectorIndex::centroid(std::size_t c) const {
  return EmbeddingView(centroids_).subspan(c * dimension_, dimension_);
}

SearchResult VectorIndex::Scan(EmbeddingView query, std::size_t k,
                               std::span<const std::uint32_t> clusters) const {
  const std::vector<double> q = UnitQuery(query);
  constexpr double kUnset = -std::numeric_limits<double>::infinity();
  std::vector<double> best(image_ids_.size(), kUnset);
  std::vector<std::uint32_t> best_record(image_ids_.size(), 0);
  for (std::uint32_t c : clusters) {
    for (std::uint32_t r : lists_[c]) {
      const double s = RowDot(&data_[static_cast<std::size_t>(r) * dimension_], q.data(), dimension_);
      const std::uint32_t img = image_of_record_[r];
      // Ties resolve to the lowest record id so approximate and exhaustive
      // scans agree on the reported patch.
      if (s > best[img] || (s == best[img] && r < best_record[img])) {
        best[img] = s;
        best_record[img] = r;
      }
    }
  }
  std::vector<ScoredItem> items;
  for (std::size_t i = 0; i < best.size(); ++i) {
    if (best[i] != kUnset) items.push_back({image_ids_[i], best[i]});
  }
  SearchResult result;
  result.ranked = MakeRankedList(std::move(items), k);
  for (const ScoredItem& item : result.ranked.items) {
    const auto img = static_cast<std::size_t>(
        std::lower_bound(image_ids_.begin(), image_ids_.end(), item.item_id) - image_ids_.begin());
    result.best_patch.emplace(item.item_id, keys_[best_record[img]]);
  }
  return result;
}

SearchResult VectorIndex::Search(EmbeddingView query, std::size_t k, std::size_t nprobe) const {
  if (empty()) throw Error(ErrorCode::kEmptyIndex, "index has no records");
  if (query.size() != dimension_) {
    throw Error(ErrorCode::kDimensionMismatch, "query dimension " + std::to_string(query.size()) +
                                                   ", index dimension " + std::to_string(dimension_));
  }
  if (nprobe == 0) throw Error(ErrorCode::kInvalidArgument, "nprobe must be positive");
  const std::size_t probes = std::min(nprobe, num_clusters());
  std::vector<std::uint32_t> order(num_clusters());
  std::iota(order.begin(), order.end(), 0);
  if (probes < num_clusters()) {
    const std::vector<double> q = UnitQuery(query);
    std::vector<double> score(num_clusters());
    for (std::size_t c = 0; c < num_clusters(); ++c) {
      score[c] = RowDot(&centroids_[c * dimension_], q.data(), dimension_);
    }
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(probes),
                      order.end(), [&](std::uint32_t a, std::uint32_t b) {
                        return score[a] != score[b] ? score[a] > score[b] : a < b;
                      });
    order.resize(probes);
  }
  return Scan(query, k, order);
}

SearchResult VectorIndex::SearchExact(EmbeddingView query, std::size_t k) const {
  if (empty()) throw Error(ErrorCode::kEmptyIndex, "index has no records");
  if (query.size() != dimension_) {
    throw Error(ErrorCode::kDimensionMismatch, "query dimension " + std::to_string(query.size()) +
                                                   ", index dimension " + std::to_string(dimension_));
  }
  std::vector<std::uint32_t> all(num_clusters());
  std::iota(all.begin(), all.end(), 0);
  return Scan(query, k, all);
}

bool VectorIndex::CheckInvariants() const {
  if (lists_.empty()) return keys_.empty();
  std::vector<int> seen(keys_.size(), 0);
  std::size_t total = 0;
  for (std::size_t c = 0; c < lists_.size(); ++c) {
    for (std::uint32_t r : lists_[c]) {
      if (r >= keys_.size() || assignment_[r] != c) return false;
      ++seen[r];
    }
    total += lists_[c].size();
  }
  if (total != keys_.size()) return false;
  return std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; });
}

Bytes VectorIndex::Serialize() const {
  ByteWriter w;
  w.U32(static_cast<std::uint32_t>(dimension_));
  w.U64(keys_.size());
  w.U32(static_cast<std::uint32_t>(lists_.size()));
  w.String(metadata_);
  w.F32s(data_);
  w.F32s(norms_);
  w.F32s(centroids_);
  for (std::uint32_t a : assignment_) w.U32(a);
  for (const PatchKey& k : keys_) {
    w.I64(k.image_id);
    w.U8(k.grid);
    w.U8(k.row);
    w.U8(k.col);
    w.I64(k.bbox_id);
  }
  return SealEnvelope(kIndexMagic, kIndexVersion, w.bytes());
}

VectorIndex VectorIndex::Deserialize(std::span<const std::uint8_t> file) {
  ByteReader r(OpenEnvelope(file, kIndexMagic, kIndexVersion));
  VectorIndex index;
  index.dimension_ = r.U32();
  const std::uint64_t n = r.U64();
  const std::uint32_t k = r.U32();
  index.metadata_ = r.String();
  // Bound sizes by what is actually present before allocating.
  const std::uint64_t per_record = static_cast<std::uint64_t>(index.dimension_) * 4 + 4 + 4 + 19;
  if (index.dimension_ == 0 || k == 0 || n < k || n > r.remaining() / per_record) {
    throw Error(ErrorCode::kChecksumMismatch, "inconsistent index header");
  }
  index.data_.resize(n * index.dimension_);
  r.F32s(index.data_);
  index.norms_.resize(n);
  r.F32s(index.norms_);
  index.centroids_.resize(static_cast<std::size_t>(k) * index.dimension_);
  r.F32s(index.centroids_);
  index.assignment_.resize(n);
  index.lists_.assign(k, {});
  for (std::uint64_t i = 0; i < n; ++i) {
    const std::uint32_t a = r.U32();
    if (a >= k) throw Error(ErrorCode::kChecksumMismatch, "list id out of range");
    index.assignment_[i] = a;
    index.lists_[a].push_back(static_cast<std::uint32_t>(i));
  }
  index.keys_.resize(n);
  for (PatchKey& key : index.keys_) {
    key.image_id = r.I64();
    key.grid = r.U8();
    key.row = r.U8();
    key.col = r.U8();
    key.bbox_id = r.I64();
  }
  if (!r.done()) throw Error(ErrorCode::kChecksumMismatch, "trailing bytes in index payload");
  index.IndexImages();
  return index;
}

void VectorIndex::Save(const std::filesystem::path& path) const {
  WriteFileBytes(path, Serialize());
}

VectorIndex VectorIndex::Load(const std::filesystem::path& path) {
  return Deserialize(ReadFileBytes(path));
}

}  // namespace lig
