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

#include <algorithm>
#include <set>

#include "json.hpp"
#include "lig/error.hpp"
#include "lig/random.hpp"

namespace lig {
namespace {

using nlohmann::json;

constexpr std::string_view kBundleMagic = "LIGE";
constexpr std::uint32_t kBundleVersion = 1;

template <typename T, typename Id>
const T* FindById(const std::vector<T>& sorted, Id id) {
  auto it = std::lower_bound(sorted.begin(), sorted.end(), id,
                             [](const T& v, Id target) { return v.id < target; });
  return it != sorted.end() && it->id == id ? &*it : nullptr;
}

template <typename T>
void SortUnique(std::vector<T>& v, std::string_view what) {
  std::sort(v.begin(), v.end(), [](const T& a, const T& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i - 1].id == v[i].id) {
      throw Error(ErrorCode::kParseError,
                  "duplicate " + std::string(what) + " id " + std::to_string(v[i].id));
    }
  }
}

BBox BoxFromArray(const json& arr) {
  if (!arr.is_array() || arr.size() != 4) {
    throw Error(ErrorCode::kParseError, "bbox must be [x, y, w, h]");
  }
  BBox b;
  b.x = arr[0].get<double>();
  b.y = arr[1].get<double>();
  b.w = arr[2].get<double>();
  b.h = arr[3].get<double>();
  return b;
}

std::vector<std::string> WordsFrom(const json& obj) {
  std::vector<std::string> words;
  if (obj.contains("words")) {
    for (const auto& w : obj.at("words")) words.push_back(w.get<std::string>());
  }
  return words;
}

AnnotatedDataset ParseCoco(const json& doc) {
  std::vector<ImageRecord> images;
  for (const auto& im : doc.at("images")) {
    images.push_back({im.at("id").get<ImageId>(), im.at("width").get<int>(),
                      im.at("height").get<int>(), im.value("file_name", std::string())});
  }
  std::vector<ClassInfo> classes;
  for (const auto& cat : doc.at("categories")) {
    classes.push_back({cat.at("id").get<ClassId>(), cat.at("name").get<std::string>(), WordsFrom(cat)});
  }
  std::vector<BBox> boxes;
  for (const auto& ann : doc.at("annotations")) {
    BBox b = BoxFromArray(ann.at("bbox"));
    b.id = ann.at("id").get<BBoxId>();
    b.image_id = ann.at("image_id").get<ImageId>();
    b.class_id = ann.at("category_id").get<ClassId>();
    boxes.push_back(b);
  }
  return AnnotatedDataset::Create(std::move(images), std::move(boxes), std::move(classes));
}

AnnotatedDataset ParseSimple(const json& doc) {
  std::vector<ImageRecord> images;
  for (const auto& im : doc.at("images")) {
    images.push_back({im.at("id").get<ImageId>(), im.at("width").get<int>(),
                      im.at("height").get<int>(), im.value("file_name", std::string())});
  }
  std::vector<ClassInfo> classes;
  for (const auto& c : doc.at("classes")) {
    classes.push_back({c.at("id").get<ClassId>(), c.at("name").get<std::string>(), WordsFrom(c)});
  }
  std::vector<BBox> boxes;
  for (const auto& jb : doc.at("boxes")) {
    BBox b = BoxFromArray(jb.at("xywh"));
    b.id = jb.at("id").get<BBoxId>();
    b.image_id = jb.at("image_id").get<ImageId>();
    b.class_id = jb.at("class_id").get<ClassId>();
    boxes.push_back(b);
  }
  return AnnotatedDataset::Create(std::move(images), std::move(boxes), std::move(classes));
}

void WriteKey(ByteWriter& w, const PatchKey& k) {
  w.I64(k.image_id);
  w.U8(k.grid);
  w.U8(k.row);
  w.U8(k.col);
  w.I64(k.bbox_id);
}

PatchKey ReadKey(ByteReader& r) {
  PatchKey k;
  k.image_id = r.I64();
  k.grid = r.U8();
  k.row = r.U8();
  k.col = r.U8();
  k.bbox_id = r.I64();
  return k;
}

Embedding ReadVector(ByteReader& r, std::size_t dim) {
  Embedding v(dim);
  r.F32s(v);
  return v;
}

}  // namespace

std::optional<AnnotationFormat> ParseAnnotationFormat(std::string_view name) {
  if (name == "coco_json") return AnnotationFormat::kCocoJson;
  if (name == "simple_json") return AnnotationFormat::kSimpleJson;
  return std::nullopt;
}

AnnotatedDataset AnnotatedDataset::Create(std::vector<ImageRecord> images, std::vector<BBox> boxes,
                                          std::vector<ClassInfo> classes) {
  AnnotatedDataset ds;
  SortUnique(images, "image");
  SortUnique(boxes, "bbox");
  SortUnique(classes, "class");
  for (ClassInfo& c : classes) {
    auto it = std::find(c.words.begin(), c.words.end(), c.name);
    if (it == c.words.end()) {
      c.words.insert(c.words.begin(), c.name);
    } else if (it != c.words.begin()) {
      std::rotate(c.words.begin(), it, it + 1);
    }
    std::vector<std::string> unique;
    for (const auto& w : c.words) {
      if (std::find(unique.begin(), unique.end(), w) == unique.end()) unique.push_back(w);
    }
    c.words = std::move(unique);
  }
  for (const ImageRecord& im : images) {
    if (im.width <= 0 || im.height <= 0) {
      throw Error(ErrorCode::kParseError, "image " + std::to_string(im.id) + " has no extent");
    }
  }
  ds.images_ = std::move(images);
  ds.classes_ = std::move(classes);
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const BBox& b = boxes[i];
    const ImageRecord* im = FindById(ds.images_, b.image_id);
    if (im == nullptr) {
      throw Error(ErrorCode::kDanglingReference, "bbox " + std::to_string(b.id) +
                                                     " references unknown image " +
                                                     std::to_string(b.image_id));
    }
    if (FindById(ds.classes_, b.class_id) == nullptr) {
      throw Error(ErrorCode::kDanglingReference, "bbox " + std::to_string(b.id) +
                                                     " references unknown class " +
                                                     std::to_string(b.class_id));
    }
    if (!(b.w > 0 && b.h > 0 && b.x >= 0 && b.y >= 0 && b.x + b.w <= im->width &&
          b.y + b.h <= im->height)) {
      throw Error(ErrorCode::kOutOfBoundsBBox,
                  "bbox " + std::to_string(b.id) + " outside image " + std::to_string(im->id));
    }
    ds.boxes_by_image_[b.image_id].push_back(i);
  }
  ds.boxes_ = std::move(boxes);
  return ds;
}

std::vector<ImageId> AnnotatedDataset::image_ids() const {
  std::vector<ImageId> ids;
  ids.reserve(images_.size());
  for (const auto& im : images_) ids.push_back(im.id);
  return ids;
}

const ImageRecord* AnnotatedDataset::FindImage(ImageId id) const { return FindById(images_, id); }
const BBox* AnnotatedDataset::FindBox(BBoxId id) const { return FindById(boxes_, id); }
const ClassInfo* AnnotatedDataset::FindClass(ClassId id) const { return FindById(classes_, id); }

const ClassInfo& AnnotatedDataset::GetClass(ClassId id) const {
  const ClassInfo* c = FindClass(id);
  if (c == nullptr) throw Error(ErrorCode::kDanglingReference, "unknown class " + std::to_string(id));
  return *c;
}

std::vector<const BBox*> AnnotatedDataset::BoxesOf(ImageId image) const {
  std::vector<const BBox*> out;
  auto it = boxes_by_image_.find(image);
  if (it == boxes_by_image_.end()) return out;
  for (std::size_t i : it->second) out.push_back(&boxes_[i]);
  return out;
}

std::vector<ImageId> AnnotatedDataset::ImagesWithClass(ClassId cls,
                                                       std::span<const ImageId> subset) const {
  std::vector<ImageId> out;
  for (ImageId id : subset) {
    for (const BBox* b : BoxesOf(id)) {
      if (b->class_id == cls) {
        out.push_back(id);
        break;
      }
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<ImageId> AnnotatedDataset::TestImages(int fold) const {
  std::vector<ImageId> out;
  for (const auto& [id, f] : fold_of_) {
    if (f == fold) out.push_back(id);
  }
  return out;
}

std::vector<ImageId> AnnotatedDataset::TrainImages(int fold) const {
  std::vector<ImageId> out;
  for (const auto& [id, f] : fold_of_) {
    if (f != fold) out.push_back(id);
  }
  return out;
}

void AnnotatedDataset::SetFolds(int num_folds, std::map<ImageId, int> fold_of) {
  num_folds_ = num_folds;
  fold_of_ = std::move(fold_of);
}

AnnotatedDataset ParseAnnotations(std::string_view json_text, AnnotationFormat format) {
  try {
    const json doc = json::parse(json_text);
    return format == AnnotationFormat::kCocoJson ? ParseCoco(doc) : ParseSimple(doc);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, e.what());
  }
}

AnnotatedDataset LoadAnnotations(const std::filesystem::path& path, AnnotationFormat format) {
  return ParseAnnotations(ReadFileText(path), format);
}

std::string ToSimpleJson(const AnnotatedDataset& ds, std::string_view info) {
  json doc;
  if (!info.empty()) doc["info"] = json::parse(info);
  doc["images"] = json::array();
  for (const auto& im : ds.images()) {
    json j = {{"id", im.id}, {"width", im.width}, {"height", im.height}};
    if (!im.file_name.empty()) j["file_name"] = im.file_name;
    doc["images"].push_back(j);
  }
  doc["classes"] = json::array();
  for (const auto& c : ds.classes()) {
    doc["classes"].push_back({{"id", c.id}, {"name", c.name}, {"words", c.words}});
  }
  doc["boxes"] = json::array();
  for (const auto& b : ds.boxes()) {
    doc["boxes"].push_back({{"id", b.id},
                            {"image_id", b.image_id},
                            {"class_id", b.class_id},
                            {"xywh", {b.x, b.y, b.w, b.h}}});
  }
  return doc.dump(1) + "\n";
}

AnnotatedDataset SplitFolds(const AnnotatedDataset& ds, int n_folds, std::uint64_t seed) {
  if (n_folds < 2) throw Error(ErrorCode::kInvalidConfig, "need at least 2 folds");
  std::vector<ImageId> ids = ds.image_ids();
  if (ids.size() < static_cast<std::size_t>(n_folds)) {
    throw Error(ErrorCode::kTooFewImages, std::to_string(ids.size()) + " images for " +
                                              std::to_string(n_folds) + " folds");
  }
  Rng rng(seed);
  Shuffle(rng, ids);
  std::map<ImageId, int> fold_of;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    fold_of[ids[i]] = static_cast<int>(i % static_cast<std::size_t>(n_folds));
  }
  AnnotatedDataset out = ds;
  out.SetFolds(n_folds, std::move(fold_of));
  return out;
}

std::string RenderPrompt(std::string_view prompt_template, std::string_view word) {
  std::string out(prompt_template);
  const auto pos = out.find("{}");
  if (pos == std::string::npos) return out + " " + std::string(word);
  out.replace(pos, 2, word);
  return out;
}

void EmbeddingBundle::AddPatch(const PatchKey& key, EmbeddingView v) {
  if (v.size() != dimension) {
    throw Error(ErrorCode::kDimensionMismatch, "patch " + key.ToString() + " has dimension " +
                                                   std::to_string(v.size()));
  }
  patch_keys.push_back(key);
  patch_data.insert(patch_data.end(), v.begin(), v.end());
}

const Embedding* EmbeddingBundle::FindBox(BBoxId id) const {
  auto it = bbox_embeddings.find(id);
  return it == bbox_embeddings.end() ? nullptr : &it->second;
}

const Embedding* EmbeddingBundle::FindText(std::string_view prompt) const {
  auto it = text_embeddings.find(std::string(prompt));
  return it == text_embeddings.end() ? nullptr : &it->second;
}

void EmbeddingBundle::CollectPatches(std::span<const ImageId> images, std::vector<PatchKey>& keys,
                                     std::vector<float>& data) const {
  const std::set<ImageId> wanted(images.begin(), images.end());
  for (std::size_t i = 0; i < patch_keys.size(); ++i) {
    if (wanted.count(patch_keys[i].image_id) == 0) continue;
    keys.push_back(patch_keys[i]);
    const auto v = patch(i);
    data.insert(data.end(), v.begin(), v.end());
  }
}

Bytes EmbeddingBundle::Serialize() const {
  ByteWriter w;
  w.U32(static_cast<std::uint32_t>(dimension));
  w.String(metadata);
  w.U64(patch_keys.size());
  w.U64(bbox_embeddings.size());
  w.U64(text_embeddings.size());
  for (std::size_t i = 0; i < patch_keys.size(); ++i) {
    WriteKey(w, patch_keys[i]);
    w.F32s(patch(i));
  }
  for (const auto& [id, v] : bbox_embeddings) {
    w.I64(id);
    w.F32s(v);
  }
  for (const auto& [prompt, v] : text_embeddings) {
    w.String(prompt);
    w.F32s(v);
  }
  return SealEnvelope(kBundleMagic, kBundleVersion, w.bytes());
}

EmbeddingBundle EmbeddingBundle::Deserialize(std::span<const std::uint8_t> file) {
  ByteReader r(OpenEnvelope(file, kBundleMagic, kBundleVersion));
  EmbeddingBundle b;
  b.dimension = r.U32();
  b.metadata = r.String();
  const std::uint64_t n_patches = r.U64();
  const std::uint64_t n_boxes = r.U64();
  const std::uint64_t n_texts = r.U64();
  const std::uint64_t row = static_cast<std::uint64_t>(b.dimension) * 4;
  if (b.dimension == 0 || n_patches > r.remaining() / (row + 19) ||
      n_boxes > r.remaining() / (row + 8) || n_texts > r.remaining() / (row + 4)) {
    throw Error(ErrorCode::kChecksumMismatch, "inconsistent bundle section table");
  }
  b.patch_keys.reserve(n_patches);
  b.patch_data.resize(n_patches * b.dimension);
  for (std::uint64_t i = 0; i < n_patches; ++i) {
    b.patch_keys.push_back(ReadKey(r));
    r.F32s(std::span<float>(b.patch_data).subspan(i * b.dimension, b.dimension));
  }
  for (std::uint64_t i = 0; i < n_boxes; ++i) {
    const BBoxId id = r.I64();
    b.bbox_embeddings.emplace(id, ReadVector(r, b.dimension));
  }
  for (std::uint64_t i = 0; i < n_texts; ++i) {
    std::string prompt = r.String();
    b.text_embeddings.emplace(std::move(prompt), ReadVector(r, b.dimension));
  }
  if (!r.done()) throw Error(ErrorCode::kChecksumMismatch, "trailing bytes in bundle payload");
  return b;
}

void EmbeddingBundle::Save(const std::filesystem::path& path) const {
  WriteFileBytes(path, Serialize());
}

EmbeddingBundle EmbeddingBundle::Read(const std::filesystem::path& path) {
  return Deserialize(ReadFileBytes(path));
}

void ValidateBundle(const EmbeddingBundle& bundle, const AnnotatedDataset& ds,
                    const BundleExpectations& expect) {
  if (expect.dimension && *expect.dimension != bundle.dimension) {
    throw Error(ErrorCode::kDimensionMismatch, "bundle dimension " +
                                                   std::to_string(bundle.dimension) + ", expected " +
                                                   std::to_string(*expect.dimension));
  }
  if (bundle.dimension < 2) throw Error(ErrorCode::kDimensionMismatch, "dimension must be >= 2");
  std::vector<PatchKey> keys = bundle.patch_keys;
  std::sort(keys.begin(), keys.end());
  if (std::adjacent_find(keys.begin(), keys.end()) != keys.end()) {
    throw Error(ErrorCode::kParseError, "duplicate patch key in bundle");
  }
  for (const PatchKey& k : keys) {
    if (!k.IsValid() || k.is_bbox()) {
      throw Error(ErrorCode::kParseError, "invalid grid patch key " + k.ToString());
    }
    if (std::find(kGridSizes.begin(), kGridSizes.end(), int{k.grid}) == kGridSizes.end()) {
      throw Error(ErrorCode::kParseError, "unsupported grid size in " + k.ToString());
    }
    if (ds.FindImage(k.image_id) == nullptr) {
      throw Error(ErrorCode::kDanglingReference, "patch for unknown " + k.ToString());
    }
  }
  for (ImageId id : ds.image_ids()) {
    for (const PatchKey& want : GridKeysForImage(id)) {
      if (!std::binary_search(keys.begin(), keys.end(), want)) {
        throw Error(ErrorCode::kMissingEmbedding, "no embedding for " + want.ToString());
      }
    }
  }
  for (const BBox& b : ds.boxes()) {
    if (bundle.FindBox(b.id) == nullptr) {
      throw Error(ErrorCode::kMissingEmbedding, "no crop embedding for bbox " + std::to_string(b.id));
    }
  }
  for (const ClassInfo& c : ds.classes()) {
    for (const std::string& w : c.words) {
      const std::string prompt = RenderPrompt(expect.prompt_template, w);
      if (bundle.FindText(prompt) == nullptr) {
        throw Error(ErrorCode::kMissingEmbedding, "no text embedding for prompt \"" + prompt + "\"");
      }
    }
  }
  for (const auto& [id, v] : bundle.bbox_embeddings) {
    if (v.size() != bundle.dimension) throw Error(ErrorCode::kDimensionMismatch, "bbox vector size");
  }
  for (const auto& [p, v] : bundle.text_embeddings) {
    if (v.size() != bundle.dimension) throw Error(ErrorCode::kDimensionMismatch, "text vector size");
  }
}

EmbeddingBundle LoadEmbeddings(const std::filesystem::path& path, const AnnotatedDataset& ds,
                               const BundleExpectations& expect) {
  EmbeddingBundle bundle = EmbeddingBundle::Read(path);
  ValidateBundle(bundle, ds, expect);
  return bundle;
}

VectorIndex BuildImageIndex(const EmbeddingBundle& bundle, std::span<const ImageId> images,
                            const IndexBuildOptions& options) {
  std::vector<PatchKey> keys;
  std::vector<float> data;
  bundle.CollectPatches(images, keys, data);
  return VectorIndex::Build(keys, data, bundle.dimension, options);
}

CandidatePool BuildCandidatePool(const AnnotatedDataset& ds, const EmbeddingBundle& bundle,
                                 ClassId cls, std::span<const ImageId> train_images,
                                 std::string_view prompt_template) {
  const ClassInfo& info = ds.GetClass(cls);
  CandidatePool pool;
  pool.class_id = cls;
  pool.class_name = info.name;
  std::vector<ImageId> images(train_images.begin(), train_images.end());
  std::sort(images.begin(), images.end());
  images.erase(std::unique(images.begin(), images.end()), images.end());
  for (ImageId image : images) {
    const BBox* best = nullptr;
    for (const BBox* b : ds.BoxesOf(image)) {
      if (b->class_id != cls) continue;
      if (best == nullptr || b->area() > best->area() ||
          (b->area() == best->area() && b->id < best->id)) {
        best = b;
      }
    }
    if (best == nullptr) continue;
    const Embedding* v = bundle.FindBox(best->id);
    if (v == nullptr) {
      throw Error(ErrorCode::kMissingEmbedding, "no crop embedding for bbox " + std::to_string(best->id));
    }
    pool.visuals.push_back({image, best->id, *v});
  }
  if (pool.visuals.empty()) {
    throw Error(ErrorCode::kClassAbsentFromTrainSplit,
                "class " + info.name + " has no instances in the training images");
  }
  for (const std::string& w : info.words) {
    std::string prompt = RenderPrompt(prompt_template, w);
    const Embedding* v = bundle.FindText(prompt);
    if (v == nullptr) {
      throw Error(ErrorCode::kMissingEmbedding, "no text embedding for prompt \"" + prompt + "\"");
    }
    pool.texts.push_back({w, std::move(prompt), *v});
  }
  return pool;
}

}  // namespace lig
