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

// Seeded synthetic worlds for desk-scale experiments. Every embedding is
// built from an orthonormal set of directions: one center per class, a few
// scene directions, per-class subtype directions and a text-only offset.
// All nuisance terms scale with noise_sigma, so noise_sigma = 0 gives a world
// where each class's canonical prompt equals its center and every instance
// has a grid cell that is exactly that center.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "lig/dataset.hpp"

namespace lig {

struct SynthConfig {
  int n_classes = 4;
  int images_per_class = 50;
  std::size_t dimension = 64;
  double noise_sigma = 0.1;
  std::uint64_t seed = 0;

  // Structure of the world. Weights are multiplied by noise_sigma.
  int n_scenes = 4;
  int n_subtypes = 3;
  int image_size = 900;           // square images, 9 x 9 cells of 100 px
  double context_rate = 0.25;     // P(image uses its class's preferred scene)
  double extra_object_rate = 0.3; // P(image also holds a one-cell object of another class)
  double atypical_rate = 0.0;     // P(an instance is scene-dominated)
  double background_weight = 1.0; // scene weight of uncovered cell area (not scaled)
  double subtype_weight = 20.0;
  double instance_noise = 2.0;
  double atypical_scene_weight = 12.0;
  double small_object_noise = 8.0;
  double crop_noise = 2.0;
  // Each crop gets a clutter severity u ~ U(0,1)^clutter_power; severity
  // scales how much scene and noise leak into the crop.
  double clutter_power = 1.0;
  double clutter_scene_weight = 200.0;
  double clutter_noise = 5.0;
  double background_noise = 3.0;
  double text_gap_weight = 5.0;      // shared text-only offset
  double text_context_weight = 13.0;  // pull toward the class's preferred scene
  double text_confusion_weight = 0.0;  // pull of every word toward the next class
  double text_noise = 1.0;
  double synonym_noise = 3.0;
  double text_subtype_weight = 5.0;
  double text_ambiguity_weight = 5.0;  // pull of the ambiguous word toward the next class
  std::string prompt_template = "a photo of {}";

  void Validate() const;  // throws kInvalidConfig
};

nlohmann::json ToJson(const SynthConfig& config);
// Starts from defaults and overrides any keys present.
SynthConfig SynthConfigFromJson(const nlohmann::json& doc);

// Named presets: "default", and "text_ambiguous" where words are much less
// reliable than box crops.
std::optional<SynthConfig> SynthPreset(std::string_view name);

struct SynthWorld {
  SynthConfig config;
  AnnotatedDataset dataset;
  EmbeddingBundle bundle;
  std::vector<Embedding> centers;  // ground-truth class centers, by class index
};

SynthWorld SynthGenerate(const SynthConfig& config);

}  // namespace lig
