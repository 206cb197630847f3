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

// Held-out evaluation: per-class retrieval on a test-fold index, PR curves
// and AP@k, cross-fold aggregation, and report emission.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "lig/dataset.hpp"
#include "lig/instructions.hpp"
#include "lig/metrics.hpp"
#include "lig/retrieval.hpp"

namespace lig {

struct ClassQueries {
  ClassId class_id = 0;
  std::vector<InstructionQuery> queries;
};

struct ClassEvaluation {
  ClassId class_id = 0;
  bool absent = false;  // no positives in the test images; AP undefined
  std::size_t num_positives = 0;
  std::size_t num_queries = 0;
  RankedList ranked;
  std::vector<PrPoint> curve;  // k = 1..config.k
  double ap = 0.0;
};

// Runs each class's queries on the test index, merges per config, and scores
// against the test images containing the class.
std::vector<ClassEvaluation> EvaluateMethod(std::span<const ClassQueries> queries,
                                            const VectorIndex& test_index,
                                            const AnnotatedDataset& ds,
                                            std::span<const ImageId> test_images,
                                            const QueryConfig& config);

// Everything a method may use for one fold. The training index is built on
// first request.
class FoldContext {
 public:
  FoldContext(int fold, const AnnotatedDataset& ds, const EmbeddingBundle& bundle,
              std::vector<ImageId> train_images, IndexBuildOptions index_options);

  int fold() const { return fold_; }
  const AnnotatedDataset& dataset() const { return ds_; }
  const EmbeddingBundle& bundle() const { return bundle_; }
  std::span<const ImageId> train_images() const { return train_images_; }
  const VectorIndex& TrainIndex() const;

 private:
  int fold_;
  const AnnotatedDataset& ds_;
  const EmbeddingBundle& bundle_;
  std::vector<ImageId> train_images_;
  IndexBuildOptions index_options_;
  mutable std::optional<VectorIndex> train_index_;
};

// A method maps a fold to one instruction set per class it could produce.
// Classes it omits are evaluated as absent-from-train.
using Method = std::function<std::map<ClassId, InstructionSet>(const FoldContext&)>;

struct CrossFoldConfig {
  std::string method_name;
  QueryConfig query;
  ModalityMask mask = ModalityMask::kBoth;
  IndexBuildOptions index;
  std::size_t jobs = 1;
};

struct FoldClassRecord {
  int fold = 0;
  ClassId class_id = 0;
  std::optional<double> ap;  // unset when the class is absent from the fold
  std::size_t num_positives = 0;
  std::size_t num_queries = 0;
  std::string note;
};

struct ClassReport {
  ClassId class_id = 0;
  std::string name;
  std::vector<std::optional<double>> fold_ap;  // indexed by fold
  double ap_mean = 0.0;
  double ap_std = 0.0;  // population std over folds where the class is present
  double mean_queries = 0.0;
  std::vector<PrPoint> mean_curve;  // pointwise mean over present folds
};

struct EvalReport {
  std::string method;
  nlohmann::json config = nlohmann::json::object();
  int num_folds = 0;
  std::vector<ClassReport> per_class;  // ascending class id
  std::vector<FoldClassRecord> records;  // fold-major, then class id
  double map = 0.0;

  // Checks the aggregate identities (mAP, means, ranges, curve monotonicity).
  bool Validate(std::string* why = nullptr) const;
};

// Folds must already be assigned on `ds`. For every fold: run the method on
// the training split, build the test index, evaluate, then aggregate.
// A failure inside a fold is rethrown with the fold id in the message.
EvalReport CrossFold(const AnnotatedDataset& ds, const EmbeddingBundle& bundle, const Method& method,
                     const CrossFoldConfig& config);

// Builds the report from per-fold evaluations (exposed for the CLI, which
// evaluates precomputed instruction sets).
EvalReport AggregateFolds(const AnnotatedDataset& ds,
                          const std::vector<std::vector<ClassEvaluation>>& folds,
                          const std::string& method, nlohmann::json config, std::size_t k);

nlohmann::json ToJson(const EvalReport& report);
EvalReport ReportFromJson(const nlohmann::json& doc);

// CSV: one row per (class, fold).
std::string ToCsv(const EvalReport& report);

// Markdown grid with one column per report (AP x 100, mean +- std over
// folds), an mAP footer, and PR points of each report at selected cutoffs.
std::string ToMarkdown(std::span<const EvalReport> reports);

struct EmitFormats {
  bool json = true;
  bool csv = true;
  bool markdown = true;
};

// Writes <stem>.json / .csv / .md under dir; returns the written paths.
std::vector<std::filesystem::path> EmitReport(const EvalReport& report,
                                              const std::filesystem::path& dir,
                                              const std::string& stem, const EmitFormats& formats);

}  // namespace lig
