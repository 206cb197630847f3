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

#include "lig/instructions.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "lig/error.hpp"

namespace lig {
namespace {

using nlohmann::json;

const BBox* MatchBox(const AnnotatedDataset& ds, ImageId image, const json& xywh) {
  if (!xywh.is_array() || xywh.size() != 4) return nullptr;
  for (const BBox* b : ds.BoxesOf(image)) {
    const double v[4] = {b->x, b->y, b->w, b->h};
    bool same = true;
    for (int i = 0; i < 4; ++i) same = same && std::abs(v[i] - xywh[i].get<double>()) < 1e-6;
    if (same) return b;
  }
  return nullptr;
}

MultimodalPair EntryFromJson(const json& j, const AnnotatedDataset& ds,
                             const EmbeddingBundle& bundle, std::string_view prompt_template) {
  MultimodalPair p;
  if (j.contains("word") && !j.at("word").is_null()) {
    p.word = j.at("word").get<std::string>();
    p.prompt = j.contains("prompt") && !j.at("prompt").is_null()
                   ? j.at("prompt").get<std::string>()
                   : RenderPrompt(prompt_template, p.word);
    const Embedding* t = bundle.FindText(p.prompt);
    if (t == nullptr) {
      throw Error(ErrorCode::kMissingEmbedding, "no text embedding for prompt \"" + p.prompt + "\"");
    }
    p.text_embedding = *t;
  }
  const bool has_id = j.contains("bbox_id") && !j.at("bbox_id").is_null();
  const bool has_xywh = j.contains("bbox_xywh") && !j.at("bbox_xywh").is_null();
  if (has_id || has_xywh) {
    const BBox* box = nullptr;
    if (has_id) {
      box = ds.FindBox(j.at("bbox_id").get<BBoxId>());
    } else {
      box = MatchBox(ds, j.at("image_id").get<ImageId>(), j.at("bbox_xywh"));
    }
    if (box == nullptr) {
      throw Error(ErrorCode::kMissingEmbedding, "instruction entry references unknown bbox: " + j.dump());
    }
    const Embedding* v = bundle.FindBox(box->id);
    if (v == nullptr) {
      throw Error(ErrorCode::kMissingEmbedding, "no crop embedding for bbox " + std::to_string(box->id));
    }
    p.bbox_id = box->id;
    p.image_id = box->image_id;
    p.visual_embedding = *v;
  }
  if (!p.has_text() && !p.has_visual()) {
    throw Error(ErrorCode::kParseError, "instruction entry has neither word nor bbox");
  }
  if (j.contains("train_auc_after") && !j.at("train_auc_after").is_null()) {
    p.train_auc_after = j.at("train_auc_after").get<double>();
  }
  return p;
}

}  // namespace

std::string MultimodalPair::Label() const {
  std::string s = has_text() ? word : std::string("-");
  s += " / ";
  s += has_visual() ? "bbox " + std::to_string(*bbox_id) : std::string("-");
  return s;
}

InstructionQuery MultimodalPair::ToQuery() const {
  InstructionQuery q;
  if (has_text()) q.text = text_embedding;
  if (has_visual()) q.visual = visual_embedding;
  return q;
}

MultimodalPair MakePair(const TextCandidate& text, const VisualCandidate& visual) {
  MultimodalPair p;
  p.word = text.word;
  p.prompt = text.prompt;
  p.text_embedding = text.embedding;
  p.bbox_id = visual.bbox_id;
  p.image_id = visual.image_id;
  p.visual_embedding = visual.embedding;
  return p;
}

MultimodalPair MakeTextEntry(const TextCandidate& text) {
  MultimodalPair p;
  p.word = text.word;
  p.prompt = text.prompt;
  p.text_embedding = text.embedding;
  return p;
}

MultimodalPair MakeVisualEntry(const VisualCandidate& visual) {
  MultimodalPair p;
  p.bbox_id = visual.bbox_id;
  p.image_id = visual.image_id;
  p.visual_embedding = visual.embedding;
  return p;
}

std::vector<InstructionQuery> QueriesFor(const InstructionSet& set, ModalityMask mask) {
  std::vector<InstructionQuery> out;
  std::set<std::string> seen_words;
  std::set<BBoxId> seen_boxes;
  for (const MultimodalPair& p : set.pairs) {
    switch (mask) {
      case ModalityMask::kBoth:
        out.push_back(p.ToQuery());
        break;
      case ModalityMask::kTextsOnly:
        if (p.has_text() && seen_words.insert(p.prompt).second) {
          out.push_back({p.text_embedding, std::nullopt});
        }
        break;
      case ModalityMask::kBBoxesOnly:
        if (p.has_visual() && seen_boxes.insert(*p.bbox_id).second) {
          out.push_back({std::nullopt, p.visual_embedding});
        }
        break;
    }
  }
  return out;
}

json ToJson(const InstructionSet& set, const AnnotatedDataset& ds) {
  json doc;
  doc["class"] = set.class_name;
  doc["class_id"] = set.class_id;
  doc["method"] = set.method;
  doc["pairs"] = json::array();
  for (const MultimodalPair& p : set.pairs) {
    json e;
    e["word"] = p.has_text() ? json(p.word) : json(nullptr);
    e["prompt"] = p.has_text() ? json(p.prompt) : json(nullptr);
    if (p.has_visual()) {
      e["image_id"] = p.image_id;
      e["bbox_id"] = *p.bbox_id;
      if (const BBox* b = ds.FindBox(*p.bbox_id)) {
        e["bbox_xywh"] = {b->x, b->y, b->w, b->h};
      } else {
        e["bbox_xywh"] = nullptr;
      }
    } else {
      e["image_id"] = nullptr;
      e["bbox_id"] = nullptr;
      e["bbox_xywh"] = nullptr;
    }
    e["train_auc_after"] = p.train_auc_after ? json(*p.train_auc_after) : json(nullptr);
    doc["pairs"].push_back(std::move(e));
  }
  doc["auc_trace"] = set.auc_trace;
  doc["config"] = set.config;
  return doc;
}

InstructionSet InstructionSetFromJson(const json& doc, const AnnotatedDataset& ds,
                                      const EmbeddingBundle& bundle,
                                      std::string_view prompt_template) {
  try {
    InstructionSet set;
    set.class_id = doc.at("class_id").get<ClassId>();
    set.class_name = doc.value("class", ds.GetClass(set.class_id).name);
    set.method = doc.value("method", std::string());
    for (const auto& e : doc.at("pairs")) {
      set.pairs.push_back(EntryFromJson(e, ds, bundle, prompt_template));
    }
    if (doc.contains("auc_trace")) set.auc_trace = doc.at("auc_trace").get<std::vector<double>>();
    if (doc.contains("config")) set.config = doc.at("config");
    return set;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, e.what());
  }
}

void SaveInstructionSet(const std::filesystem::path& path, const InstructionSet& set,
                        const AnnotatedDataset& ds) {
  WriteFileText(path, ToJson(set, ds).dump(2) + "\n");
}

InstructionSet LoadInstructionSet(const std::filesystem::path& path, const AnnotatedDataset& ds,
                                  const EmbeddingBundle& bundle, std::string_view prompt_template) {
  json doc;
  try {
    doc = json::parse(ReadFileText(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, path.string() + ": " + e.what());
  }
  return InstructionSetFromJson(doc, ds, bundle, prompt_template);
}

std::map<ClassId, InstructionSet> ParseOriginalInstructions(const json& doc,
                                                            const AnnotatedDataset& ds,
                                                            const EmbeddingBundle& bundle,
                                                            std::string_view prompt_template) {
  std::map<ClassId, InstructionSet> out;
  try {
    if (!doc.is_array()) throw Error(ErrorCode::kParseError, "original instructions must be an array");
    for (const auto& e : doc) {
      const json& cls = e.at("class");
      const ClassInfo* info = nullptr;
      if (cls.is_number_integer()) {
        info = ds.FindClass(cls.get<ClassId>());
      } else {
        const auto name = cls.get<std::string>();
        for (const ClassInfo& c : ds.classes()) {
          if (c.name == name) info = &c;
        }
      }
      if (info == nullptr) {
        throw Error(ErrorCode::kDanglingReference, "unknown class " + cls.dump());
      }
      InstructionSet& set = out[info->id];
      set.class_id = info->id;
      set.class_name = info->name;
      set.method = "original_pairs";
      set.pairs.push_back(EntryFromJson(e, ds, bundle, prompt_template));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, e.what());
  }
  return out;
}

}  // namespace lig
