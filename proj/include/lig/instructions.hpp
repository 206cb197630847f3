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

// Labeling-instruction sets: the (text, bbox crop) pairs chosen for a class,
// plus their JSON form. The same schema carries baseline outputs, where an
// entry may hold only a word or only a box.

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "lig/dataset.hpp"
#include "lig/retrieval.hpp"

namespace lig {

struct MultimodalPair {
  std::string word;  // empty when the entry has no text part
  std::string prompt;
  Embedding text_embedding;

  std::optional<BBoxId> bbox_id;  // unset when the entry has no visual part
  ImageId image_id = 0;
  Embedding visual_embedding;

  std::optional<double> train_auc_after;

  bool has_text() const { return !word.empty(); }
  bool has_visual() const { return bbox_id.has_value(); }
  std::string Label() const;  // "word / bbox 12" for logs

  InstructionQuery ToQuery() const;
};

MultimodalPair MakePair(const TextCandidate& text, const VisualCandidate& visual);
MultimodalPair MakeTextEntry(const TextCandidate& text);
MultimodalPair MakeVisualEntry(const VisualCandidate& visual);

struct InstructionSet {
  ClassId class_id = 0;
  std::string class_name;
  std::string method;
  std::vector<MultimodalPair> pairs;  // selection order
  std::vector<double> auc_trace;      // training AUC after each accepted pair
  nlohmann::json config = nlohmann::json::object();
};

enum class ModalityMask { kBoth, kTextsOnly, kBBoxesOnly };

// Queries for evaluation. With a mask, the other modality is dropped and
// duplicate words or boxes collapse to one query.
std::vector<InstructionQuery> QueriesFor(const InstructionSet& set, ModalityMask mask);

nlohmann::json ToJson(const InstructionSet& set, const AnnotatedDataset& ds);

// Resolves embeddings through the bundle. Entries name a box by bbox_id, or by
// (image_id, bbox_xywh) when the id is absent. Throws kMissingEmbedding.
InstructionSet InstructionSetFromJson(const nlohmann::json& doc, const AnnotatedDataset& ds,
                                      const EmbeddingBundle& bundle,
                                      std::string_view prompt_template = kDefaultPromptTemplate);

void SaveInstructionSet(const std::filesystem::path& path, const InstructionSet& set,
                        const AnnotatedDataset& ds);
InstructionSet LoadInstructionSet(const std::filesystem::path& path, const AnnotatedDataset& ds,
                                  const EmbeddingBundle& bundle,
                                  std::string_view prompt_template = kDefaultPromptTemplate);

// Original-instruction file: [{class, word, image_id, bbox_xywh}], grouped per
// class (matched by class name or numeric id).
std::map<ClassId, InstructionSet> ParseOriginalInstructions(
    const nlohmann::json& doc, const AnnotatedDataset& ds, const EmbeddingBundle& bundle,
    std::string_view prompt_template = kDefaultPromptTemplate);

}  // namespace lig
