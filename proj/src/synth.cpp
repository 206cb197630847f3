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

#include "lig/synth.hpp"

#include <algorithm>
#include <cmath>

#include "lig/error.hpp"
#include "lig/random.hpp"

namespace lig {
namespace {

using nlohmann::json;
using Vec = std::vector<double>;

constexpr int kCells = 9;

struct Rect {
  int x = 0, y = 0, w = 0, h = 0;  // in 9-grid cells
};

// Orthonormal directions from Gram-Schmidt over Gaussian draws. When more
// directions than dimensions are requested the extras are only unit length.
std::vector<Vec> Directions(Rng& rng, std::size_t count, std::size_t dim) {
  std::vector<Vec> out;
  for (std::size_t n = 0; n < count; ++n) {
    Vec v(dim);
    for (double& x : v) x = StandardNormal(rng);
    if (n < dim) {
      for (const Vec& u : out) {
        double d = 0.0;
        for (std::size_t i = 0; i < dim; ++i) d += v[i] * u[i];
        for (std::size_t i = 0; i < dim; ++i) v[i] -= d * u[i];
      }
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
    out.push_back(std::move(v));
  }
  return out;
}

// Isotropic Gaussian with E|xi|^2 = 1.
Vec Isotropic(Rng& rng, std::size_t dim) {
  Vec v(dim);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
  for (double& x : v) x = StandardNormal(rng) * scale;
  return v;
}

void Axpy(Vec& y, double a, const Vec& x) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

Embedding ToFloat(const Vec& v) {
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  Embedding out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i] / norm);
  return out;
}

double Overlap1d(double a0, double a1, double b0, double b1) {
  return std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
}

}  // namespace

void SynthConfig::Validate() const {
  auto bad = [](const std::string& why) { throw Error(ErrorCode::kInvalidConfig, why); };
  if (n_classes < 2) bad("n_classes must be >= 2");
  if (dimension < 8) bad("dimension must be >= 8");
  if (images_per_class < 1) bad("images_per_class must be >= 1");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) bad("noise_sigma must be >= 0");
  if (n_scenes < 1 || n_subtypes < 1) bad("n_scenes and n_subtypes must be >= 1");
  if (image_size < kCells || image_size % kCells != 0) bad("image_size must be a multiple of 9");
  if (!(clutter_power > 0.0)) bad("clutter_power must be positive");
  for (double p : {context_rate, extra_object_rate, atypical_rate}) {
    if (!(p >= 0.0 && p <= 1.0)) bad("rates must lie in [0, 1]");
  }
}

json ToJson(const SynthConfig& c) {
  return {{"n_classes", c.n_classes},
          {"images_per_class", c.images_per_class},
          {"dimension", c.dimension},
          {"noise_sigma", c.noise_sigma},
          {"seed", c.seed},
          {"n_scenes", c.n_scenes},
          {"n_subtypes", c.n_subtypes},
          {"image_size", c.image_size},
          {"context_rate", c.context_rate},
          {"extra_object_rate", c.extra_object_rate},
          {"atypical_rate", c.atypical_rate},
          {"background_weight", c.background_weight},
          {"subtype_weight", c.subtype_weight},
          {"instance_noise", c.instance_noise},
          {"atypical_scene_weight", c.atypical_scene_weight},
          {"small_object_noise", c.small_object_noise},
          {"crop_noise", c.crop_noise},
          {"clutter_power", c.clutter_power},
          {"clutter_scene_weight", c.clutter_scene_weight},
          {"clutter_noise", c.clutter_noise},
          {"background_noise", c.background_noise},
          {"text_gap_weight", c.text_gap_weight},
          {"text_context_weight", c.text_context_weight},
          {"text_confusion_weight", c.text_confusion_weight},
          {"text_noise", c.text_noise},
          {"synonym_noise", c.synonym_noise},
          {"text_subtype_weight", c.text_subtype_weight},
          {"text_ambiguity_weight", c.text_ambiguity_weight},
          {"prompt_template", c.prompt_template}};
}

SynthConfig SynthConfigFromJson(const json& doc) {
  SynthConfig c;
  json merged = ToJson(c);
  for (const auto& [key, value] : doc.items()) {
    if (!merged.contains(key)) throw Error(ErrorCode::kInvalidConfig, "unknown synth key " + key);
    merged[key] = value;
  }
  try {
    c.n_classes = merged["n_classes"].get<int>();
    c.images_per_class = merged["images_per_class"].get<int>();
    c.dimension = merged["dimension"].get<std::size_t>();
    c.noise_sigma = merged["noise_sigma"].get<double>();
    c.seed = merged["seed"].get<std::uint64_t>();
    c.n_scenes = merged["n_scenes"].get<int>();
    c.n_subtypes = merged["n_subtypes"].get<int>();
    c.image_size = merged["image_size"].get<int>();
    c.context_rate = merged["context_rate"].get<double>();
    c.extra_object_rate = merged["extra_object_rate"].get<double>();
    c.atypical_rate = merged["atypical_rate"].get<double>();
    c.background_weight = merged["background_weight"].get<double>();
    c.subtype_weight = merged["subtype_weight"].get<double>();
    c.instance_noise = merged["instance_noise"].get<double>();
    c.atypical_scene_weight = merged["atypical_scene_weight"].get<double>();
    c.small_object_noise = merged["small_object_noise"].get<double>();
    c.crop_noise = merged["crop_noise"].get<double>();
    c.clutter_power = merged["clutter_power"].get<double>();
    c.clutter_scene_weight = merged["clutter_scene_weight"].get<double>();
    c.clutter_noise = merged["clutter_noise"].get<double>();
    c.background_noise = merged["background_noise"].get<double>();
    c.text_gap_weight = merged["text_gap_weight"].get<double>();
    c.text_context_weight = merged["text_context_weight"].get<double>();
    c.text_confusion_weight = merged["text_confusion_weight"].get<double>();
    c.text_noise = merged["text_noise"].get<double>();
    c.synonym_noise = merged["synonym_noise"].get<double>();
    c.text_subtype_weight = merged["text_subtype_weight"].get<double>();
    c.text_ambiguity_weight = merged["text_ambiguity_weight"].get<double>();
    c.prompt_template = merged["prompt_template"].get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, e.what());
  }
  return c;
}

std::optional<SynthConfig> SynthPreset(std::string_view name) {
  SynthConfig c;
  if (name == "default") return c;
  if (name == "text_ambiguous") {
    c.text_context_weight = 16.0;
    c.text_ambiguity_weight = 12.0;
    c.synonym_noise = 6.0;
    return c;
  }
  return std::nullopt;
}

SynthWorld SynthGenerate(const SynthConfig& config) {
  config.Validate();
  const std::size_t dim = config.dimension;
  const double s = config.noise_sigma;
  const int n_classes = config.n_classes;
  Rng rng(config.seed);

  const std::size_t n_dirs = static_cast<std::size_t>(n_classes) * (1 + config.n_subtypes) +
                             static_cast<std::size_t>(config.n_scenes) + 1;
  const std::vector<Vec> dirs = Directions(rng, n_dirs, dim);
  std::size_t next = 0;
  std::vector<Vec> centers(dirs.begin(), dirs.begin() + n_classes);
  next += static_cast<std::size_t>(n_classes);
  std::vector<Vec> scenes(dirs.begin() + static_cast<std::ptrdiff_t>(next),
                          dirs.begin() + static_cast<std::ptrdiff_t>(next + config.n_scenes));
  next += static_cast<std::size_t>(config.n_scenes);
  std::vector<std::vector<Vec>> subtypes(n_classes);
  for (int k = 0; k < n_classes; ++k) {
    for (int j = 0; j < config.n_subtypes; ++j) subtypes[k].push_back(dirs[next++]);
  }
  const Vec& text_gap = dirs[next++];
  auto preferred_scene = [&](int k) { return k % config.n_scenes; };

  // Classes and word lists.
  std::vector<ClassInfo> classes;
  std::vector<std::vector<Vec>> word_vecs(n_classes);
  for (int k = 0; k < n_classes; ++k) {
    const std::string name = "class_" + std::to_string(k);
    const std::string other = "class_" + std::to_string((k + 1) % n_classes);
    ClassInfo info{k + 1, name, {}};
    auto add_word = [&](std::string word, Vec v) {
      info.words.push_back(std::move(word));
      word_vecs[k].push_back(std::move(v));
    };
    // Every word carries the shared text offset, a pull toward the class's
    // usual scene and one toward the next class.
    Vec base = centers[k];
    Axpy(base, s * config.text_gap_weight, text_gap);
    Axpy(base, s * config.text_context_weight, scenes[preferred_scene(k)]);
    Axpy(base, s * config.text_confusion_weight, centers[(k + 1) % n_classes]);

    Vec canonical = base;
    Axpy(canonical, s * config.text_noise, Isotropic(rng, dim));
    add_word(name, canonical);

    Vec synonym = base;
    Axpy(synonym, s * config.synonym_noise, Isotropic(rng, dim));
    add_word(name + " alt", synonym);

    for (int j = 0; j < config.n_subtypes; ++j) {
      Vec sub = base;
      Axpy(sub, s * config.text_subtype_weight, subtypes[k][j]);
      add_word(name + " type " + std::string(1, static_cast<char>('a' + j)), sub);
    }

    Vec ambiguous = base;
    Axpy(ambiguous, s * config.text_ambiguity_weight, centers[(k + 1) % n_classes]);
    add_word(name + " or " + other, ambiguous);
    classes.push_back(std::move(info));
  }

  struct Object {
    int class_index = 0;
    Rect cells;
    Vec embedding;
    BBoxId bbox_id = 0;
  };

  const int cell_px = config.image_size / kCells;
  std::vector<ImageRecord> images;
  std::vector<BBox> boxes;
  SynthWorld world;
  world.config = config;
  world.bundle.dimension = dim;
  BBoxId next_box = 1;
  const int n_images = n_classes * config.images_per_class;

  for (int i = 0; i < n_images; ++i) {
    const ImageId image_id = i + 1;
    const int k = i / config.images_per_class;
    images.push_back({image_id, config.image_size, config.image_size,
                      "synth_" + std::to_string(image_id) + ".png"});
    const int scene = UniformUnit(rng) < config.context_rate
                          ? preferred_scene(k)
                          : static_cast<int>(UniformIndex(rng, config.n_scenes));

    std::vector<Object> objects;
    {
      Object o;
      o.class_index = k;
      o.cells.w = 2 + static_cast<int>(UniformIndex(rng, 4));
      o.cells.h = 2 + static_cast<int>(UniformIndex(rng, 4));
      o.cells.x = static_cast<int>(UniformIndex(rng, kCells - o.cells.w + 1));
      o.cells.y = static_cast<int>(UniformIndex(rng, kCells - o.cells.h + 1));
      const int j = static_cast<int>(UniformIndex(rng, config.n_subtypes));
      o.embedding = centers[k];
      Axpy(o.embedding, s * config.subtype_weight, subtypes[k][j]);
      Axpy(o.embedding, s * config.instance_noise, Isotropic(rng, dim));
      if (UniformUnit(rng) < config.atypical_rate) {
        Axpy(o.embedding, s * config.atypical_scene_weight, scenes[scene]);
      }
      objects.push_back(std::move(o));
    }
    if (UniformUnit(rng) < config.extra_object_rate) {
      // One free cell outside the main object.
      std::vector<Rect> free_cells;
      const Rect& m = objects.front().cells;
      for (int y = 0; y < kCells; ++y) {
        for (int x = 0; x < kCells; ++x) {
          if (x >= m.x && x < m.x + m.w && y >= m.y && y < m.y + m.h) continue;
          free_cells.push_back({x, y, 1, 1});
        }
      }
      Object o;
      o.class_index = (k + 1 + static_cast<int>(UniformIndex(rng, n_classes - 1))) % n_classes;
      o.cells = free_cells[UniformIndex(rng, free_cells.size())];
      const int j = static_cast<int>(UniformIndex(rng, config.n_subtypes));
      o.embedding = centers[o.class_index];
      Axpy(o.embedding, s * config.subtype_weight, subtypes[o.class_index][j]);
      Axpy(o.embedding, s * config.small_object_noise, Isotropic(rng, dim));
      objects.push_back(std::move(o));
    }

    for (Object& o : objects) {
      o.bbox_id = next_box++;
      boxes.push_back({o.bbox_id, image_id, static_cast<ClassId>(o.class_index + 1),
                       static_cast<double>(o.cells.x * cell_px), static_cast<double>(o.cells.y * cell_px),
                       static_cast<double>(o.cells.w * cell_px), static_cast<double>(o.cells.h * cell_px)});
      Vec crop = o.embedding;
      Axpy(crop, s * config.crop_noise, Isotropic(rng, dim));
      const double severity = std::pow(UniformUnit(rng), config.clutter_power);
      Axpy(crop, s * severity * config.clutter_scene_weight, scenes[scene]);
      Axpy(crop, s * severity * config.clutter_noise, Isotropic(rng, dim));
      world.bundle.bbox_embeddings.emplace(o.bbox_id, ToFloat(crop));
    }

    // Grid patches: coverage-weighted object content plus scene background.
    for (const PatchKey& key : GridKeysForImage(image_id)) {
      const double cell = static_cast<double>(kCells) / key.grid;
      const double x0 = key.col * cell, x1 = x0 + cell;
      const double y0 = key.row * cell, y1 = y0 + cell;
      Vec p(dim, 0.0);
      double covered = 0.0;
      for (const Object& o : objects) {
        const double rho = Overlap1d(x0, x1, o.cells.x, o.cells.x + o.cells.w) *
                           Overlap1d(y0, y1, o.cells.y, o.cells.y + o.cells.h) / (cell * cell);
        if (rho > 0.0) {
          Axpy(p, rho, o.embedding);
          covered += rho;
        }
      }
      Axpy(p, std::max(0.0, 1.0 - covered) * config.background_weight, scenes[scene]);
      Axpy(p, s * config.background_noise, Isotropic(rng, dim));
      world.bundle.AddPatch(key, ToFloat(p));
    }
  }

  for (int k = 0; k < n_classes; ++k) {
    for (std::size_t w = 0; w < classes[k].words.size(); ++w) {
      world.bundle.text_embeddings.emplace(RenderPrompt(config.prompt_template, classes[k].words[w]),
                                           ToFloat(word_vecs[k][w]));
    }
  }
  for (const Vec& c : centers) world.centers.push_back(ToFloat(c));
  world.bundle.metadata = ToJson(config).dump();
  world.dataset = AnnotatedDataset::Create(std::move(images), std::move(boxes), std::move(classes));
  return world;
}

}  // namespace lig
