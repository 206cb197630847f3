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

#include "lig/eval.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>

#include "lig/error.hpp"

namespace lig {
namespace {

using nlohmann::json;

std::string Fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

const ClassEvaluation* FindClassEval(const std::vector<ClassEvaluation>& evals, ClassId id) {
  for (const auto& e : evals) {
    if (e.class_id == id) return &e;
  }
  return nullptr;
}

}  // namespace

std::vector<ClassEvaluation> EvaluateMethod(std::span<const ClassQueries> queries,
                                            const VectorIndex& test_index,
                                            const AnnotatedDataset& ds,
                                            std::span<const ImageId> test_images,
                                            const QueryConfig& config) {
  std::vector<ClassEvaluation> out;
  out.reserve(queries.size());
  for (const ClassQueries& cq : queries) {
    ClassEvaluation e;
    e.class_id = cq.class_id;
    e.num_queries = cq.queries.size();
    const std::vector<ImageId> positives = ds.ImagesWithClass(cq.class_id, test_images);
    e.num_positives = positives.size();
    if (positives.empty()) {
      e.absent = true;
      out.push_back(std::move(e));
      continue;
    }
    if (!cq.queries.empty()) e.ranked = RunQueries(test_index, cq.queries, config);
    e.curve = PrecisionRecallCurve(e.ranked, positives, config.k);
    e.ap = AveragePrecisionAtK(e.ranked, positives, config.k);
    out.push_back(std::move(e));
  }
  return out;
}

FoldContext::FoldContext(int fold, const AnnotatedDataset& ds, const EmbeddingBundle& bundle,
                         std::vector<ImageId> train_images, IndexBuildOptions index_options)
    : fold_(fold),
      ds_(ds),
      bundle_(bundle),
      train_images_(std::move(train_images)),
      index_options_(index_options) {}

const VectorIndex& FoldContext::TrainIndex() const {
  if (!train_index_) train_index_ = BuildImageIndex(bundle_, train_images_, index_options_);
  return *train_index_;
}

EvalReport CrossFold(const AnnotatedDataset& ds, const EmbeddingBundle& bundle, const Method& method,
                     const CrossFoldConfig& config) {
  if (ds.num_folds() < 2) throw Error(ErrorCode::kInvalidConfig, "dataset has no fold assignment");
  std::vector<std::vector<ClassEvaluation>> folds;
  for (int f = 0; f < ds.num_folds(); ++f) {
    try {
      const std::vector<ImageId> train = ds.TrainImages(f);
      const std::vector<ImageId> test = ds.TestImages(f);
      FoldContext ctx(f, ds, bundle, train, config.index);
      const std::map<ClassId, InstructionSet> sets = method(ctx);

      std::vector<ClassQueries> queries;
      std::vector<ClassId> missing;
      for (const ClassInfo& c : ds.classes()) {
        auto it = sets.find(c.id);
        if (it == sets.end()) {
          missing.push_back(c.id);
          continue;
        }
        queries.push_back({c.id, QueriesFor(it->second, config.mask)});
      }
      const VectorIndex test_index = BuildImageIndex(bundle, test, config.index);
      for (ImageId id : test_index.image_ids()) {
        if (std::binary_search(train.begin(), train.end(), id)) {
          throw Error(ErrorCode::kInvalidConfig, "test image " + std::to_string(id) + " is also a train image");
        }
      }
      std::vector<ClassEvaluation> evals = EvaluateMethod(queries, test_index, ds, test, config.query);
      for (ClassId id : missing) {
        ClassEvaluation e;
        e.class_id = id;
        e.absent = true;
        e.num_positives = ds.ImagesWithClass(id, test).size();
        evals.push_back(std::move(e));
      }
      std::sort(evals.begin(), evals.end(),
                [](const ClassEvaluation& a, const ClassEvaluation& b) { return a.class_id < b.class_id; });
      folds.push_back(std::move(evals));
    } catch (const Error& e) {
      throw Error(e.code(), "fold " + std::to_string(f) + ": " + e.what());
    }
  }
  json cfg = {{"fusion", ToString(config.query.policy)},
              {"merge", ToString(config.query.merge)},
              {"k", config.query.k},
              {"nprobe", config.query.nprobe},
              {"folds", ds.num_folds()},
              {"mask", config.mask == ModalityMask::kBoth        ? "both"
                       : config.mask == ModalityMask::kTextsOnly ? "texts_only"
                                                                 : "bboxes_only"}};
  return AggregateFolds(ds, folds, config.method_name, std::move(cfg), config.query.k);
}

EvalReport AggregateFolds(const AnnotatedDataset& ds,
                          const std::vector<std::vector<ClassEvaluation>>& folds,
                          const std::string& method, json config, std::size_t k) {
  EvalReport report;
  report.method = method;
  report.config = std::move(config);
  report.num_folds = static_cast<int>(folds.size());
  std::vector<double> class_means;
  for (const ClassInfo& c : ds.classes()) {
    ClassReport cr;
    cr.class_id = c.id;
    cr.name = c.name;
    std::vector<double> aps;
    std::vector<PrPoint> sum_curve(k);
    double sum_queries = 0.0;
    for (std::size_t f = 0; f < folds.size(); ++f) {
      const ClassEvaluation* e = FindClassEval(folds[f], c.id);
      FoldClassRecord rec;
      rec.fold = static_cast<int>(f);
      rec.class_id = c.id;
      if (e == nullptr || e->absent) {
        cr.fold_ap.push_back(std::nullopt);
        rec.num_positives = e ? e->num_positives : 0;
        rec.note = rec.num_positives == 0 ? "absent_from_test" : "absent_from_train";
        report.records.push_back(rec);
        continue;
      }
      cr.fold_ap.push_back(e->ap);
      aps.push_back(e->ap);
      sum_queries += static_cast<double>(e->num_queries);
      for (std::size_t i = 0; i < k && i < e->curve.size(); ++i) {
        sum_curve[i].precision += e->curve[i].precision;
        sum_curve[i].recall += e->curve[i].recall;
      }
      rec.ap = e->ap;
      rec.num_positives = e->num_positives;
      rec.num_queries = e->num_queries;
      report.records.push_back(rec);
    }
    if (!aps.empty()) {
      const double n = static_cast<double>(aps.size());
      double mean = 0.0;
      for (double a : aps) mean += a;
      mean /= n;
      double var = 0.0;
      for (double a : aps) var += (a - mean) * (a - mean);
      cr.ap_mean = mean;
      cr.ap_std = std::sqrt(var / n);
      cr.mean_queries = sum_queries / n;
      cr.mean_curve.resize(k);
      for (std::size_t i = 0; i < k; ++i) {
        cr.mean_curve[i] = {i + 1, sum_curve[i].precision / n, sum_curve[i].recall / n};
      }
      class_means.push_back(mean);
    }
    report.per_class.push_back(std::move(cr));
  }
  std::sort(report.records.begin(), report.records.end(),
            [](const FoldClassRecord& a, const FoldClassRecord& b) {
              return a.fold != b.fold ? a.fold < b.fold : a.class_id < b.class_id;
            });
  double total = 0.0;
  for (double m : class_means) total += m;
  report.map = class_means.empty() ? 0.0 : total / static_cast<double>(class_means.size());
  return report;
}

bool EvalReport::Validate(std::string* why) const {
  auto fail = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  double total = 0.0;
  std::size_t present = 0;
  for (const ClassReport& c : per_class) {
    if (static_cast<int>(c.fold_ap.size()) != num_folds) return fail("fold count for " + c.name);
    std::vector<double> aps;
    for (const auto& a : c.fold_ap) {
      if (!a) continue;
      if (*a < 0.0 || *a > 1.0) return fail("AP out of range for " + c.name);
      aps.push_back(*a);
    }
    if (aps.empty()) continue;
    double mean = 0.0;
    for (double a : aps) mean += a;
    mean /= static_cast<double>(aps.size());
    if (std::abs(mean - c.ap_mean) > 1e-12) return fail("ap_mean mismatch for " + c.name);
    if (c.ap_std < 0.0) return fail("negative std for " + c.name);
    for (std::size_t i = 0; i < c.mean_curve.size(); ++i) {
      const PrPoint& p = c.mean_curve[i];
      if (p.precision < -1e-12 || p.precision > 1.0 + 1e-12 || p.recall < -1e-12 ||
          p.recall > 1.0 + 1e-12) {
        return fail("PR point out of range for " + c.name);
      }
      if (i > 0 && p.recall + 1e-12 < c.mean_curve[i - 1].recall) {
        return fail("recall decreases for " + c.name);
      }
    }
    total += c.ap_mean;
    ++present;
  }
  const double expected = present == 0 ? 0.0 : total / static_cast<double>(present);
  if (std::abs(expected - map) > 1e-12) return fail("mAP is not the mean of class means");
  return true;
}

json ToJson(const EvalReport& report) {
  json doc;
  doc["method"] = report.method;
  doc["config"] = report.config;
  doc["num_folds"] = report.num_folds;
  doc["map"] = report.map;
  doc["classes"] = json::array();
  for (const ClassReport& c : report.per_class) {
    json fold_ap = json::array();
    for (const auto& a : c.fold_ap) fold_ap.push_back(a ? json(*a) : json(nullptr));
    std::vector<std::size_t> ks;
    std::vector<double> precision, recall;
    for (const PrPoint& p : c.mean_curve) {
      ks.push_back(p.k);
      precision.push_back(p.precision);
      recall.push_back(p.recall);
    }
    doc["classes"].push_back({{"class_id", c.class_id},
                              {"name", c.name},
                              {"fold_ap", fold_ap},
                              {"ap_mean", c.ap_mean},
                              {"ap_std", c.ap_std},
                              {"mean_queries", c.mean_queries},
                              {"mean_curve", {{"k", ks}, {"precision", precision}, {"recall", recall}}}});
  }
  doc["records"] = json::array();
  for (const FoldClassRecord& r : report.records) {
    doc["records"].push_back({{"fold", r.fold},
                              {"class_id", r.class_id},
                              {"ap", r.ap ? json(*r.ap) : json(nullptr)},
                              {"num_positives", r.num_positives},
                              {"num_queries", r.num_queries},
                              {"note", r.note}});
  }
  return doc;
}

EvalReport ReportFromJson(const json& doc) {
  try {
    EvalReport report;
    report.method = doc.at("method").get<std::string>();
    report.config = doc.at("config");
    report.num_folds = doc.at("num_folds").get<int>();
    report.map = doc.at("map").get<double>();
    for (const auto& jc : doc.at("classes")) {
      ClassReport c;
      c.class_id = jc.at("class_id").get<ClassId>();
      c.name = jc.at("name").get<std::string>();
      for (const auto& a : jc.at("fold_ap")) {
        c.fold_ap.push_back(a.is_null() ? std::nullopt : std::optional<double>(a.get<double>()));
      }
      c.ap_mean = jc.at("ap_mean").get<double>();
      c.ap_std = jc.at("ap_std").get<double>();
      c.mean_queries = jc.at("mean_queries").get<double>();
      const auto& curve = jc.at("mean_curve");
      const auto ks = curve.at("k").get<std::vector<std::size_t>>();
      const auto precision = curve.at("precision").get<std::vector<double>>();
      const auto recall = curve.at("recall").get<std::vector<double>>();
      if (ks.size() != precision.size() || ks.size() != recall.size()) {
        throw Error(ErrorCode::kParseError, "curve arrays differ in length");
      }
      for (std::size_t i = 0; i < ks.size(); ++i) c.mean_curve.push_back({ks[i], precision[i], recall[i]});
      report.per_class.push_back(std::move(c));
    }
    for (const auto& jr : doc.at("records")) {
      FoldClassRecord r;
      r.fold = jr.at("fold").get<int>();
      r.class_id = jr.at("class_id").get<ClassId>();
      if (!jr.at("ap").is_null()) r.ap = jr.at("ap").get<double>();
      r.num_positives = jr.at("num_positives").get<std::size_t>();
      r.num_queries = jr.at("num_queries").get<std::size_t>();
      r.note = jr.at("note").get<std::string>();
      report.records.push_back(std::move(r));
    }
    return report;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, e.what());
  }
}

std::string ToCsv(const EvalReport& report) {
  std::map<ClassId, std::string> names;
  for (const ClassReport& c : report.per_class) names[c.class_id] = c.name;
  std::ostringstream os;
  os << "method,class_id,class,fold,ap,num_positives,num_queries,note\n";
  for (const FoldClassRecord& r : report.records) {
    os << report.method << ',' << r.class_id << ',' << names[r.class_id] << ',' << r.fold << ',';
    if (r.ap) os << std::setprecision(17) << *r.ap;
    os << ',' << r.num_positives << ',' << r.num_queries << ',' << r.note << '\n';
  }
  return os.str();
}

std::string ToMarkdown(std::span<const EvalReport> reports) {
  std::ostringstream os;
  std::vector<std::pair<ClassId, std::string>> classes;
  std::set<ClassId> seen;
  for (const EvalReport& r : reports) {
    for (const ClassReport& c : r.per_class) {
      if (seen.insert(c.class_id).second) classes.emplace_back(c.class_id, c.name);
    }
  }
  std::sort(classes.begin(), classes.end());

  os << "| Category |";
  for (const EvalReport& r : reports) os << ' ' << r.method << " |";
  os << "\n|---|";
  for (std::size_t i = 0; i < reports.size(); ++i) os << "---|";
  os << '\n';
  for (const auto& [id, name] : classes) {
    os << "| " << name << " |";
    for (const EvalReport& r : reports) {
      const ClassReport* c = nullptr;
      for (const ClassReport& x : r.per_class) {
        if (x.class_id == id) c = &x;
      }
      const bool present = c && std::any_of(c->fold_ap.begin(), c->fold_ap.end(),
                                            [](const auto& a) { return a.has_value(); });
      if (present) {
        os << ' ' << Fixed(100.0 * c->ap_mean, 2) << " ± " << Fixed(100.0 * c->ap_std, 2) << " |";
      } else {
        os << " n/a |";
      }
    }
    os << '\n';
  }
  os << "| **mAP** |";
  for (const EvalReport& r : reports) os << " **" << Fixed(100.0 * r.map, 2) << "** |";
  os << '\n';

  static constexpr std::size_t kCutoffs[] = {1, 5, 10, 25, 50, 100, 250, 500, 1000};
  for (const EvalReport& r : reports) {
    os << "\n### PR points: " << r.method << "\n\n| Category |";
    std::vector<std::size_t> cutoffs;
    std::size_t max_k = 0;
    for (const ClassReport& c : r.per_class) max_k = std::max(max_k, c.mean_curve.size());
    for (std::size_t k : kCutoffs) {
      if (k <= max_k) cutoffs.push_back(k);
    }
    for (std::size_t k : cutoffs) os << " P@" << k << " | R@" << k << " |";
    os << "\n|---|";
    for (std::size_t i = 0; i < cutoffs.size(); ++i) os << "---|---|";
    os << '\n';
    for (const ClassReport& c : r.per_class) {
      if (c.mean_curve.empty()) continue;
      os << "| " << c.name << " |";
      for (std::size_t k : cutoffs) {
        const PrPoint& p = c.mean_curve[k - 1];
        os << ' ' << Fixed(p.precision, 4) << " | " << Fixed(p.recall, 4) << " |";
      }
      os << '\n';
    }
  }
  return os.str();
}

std::vector<std::filesystem::path> EmitReport(const EvalReport& report,
                                              const std::filesystem::path& dir,
                                              const std::string& stem, const EmitFormats& formats) {
  std::vector<std::filesystem::path> written;
  if (formats.json) {
    written.push_back(dir / (stem + ".json"));
    WriteFileText(written.back(), ToJson(report).dump(2) + "\n");
  }
  if (formats.csv) {
    written.push_back(dir / (stem + ".csv"));
    WriteFileText(written.back(), ToCsv(report));
  }
  if (formats.markdown) {
    written.push_back(dir / (stem + ".md"));
    WriteFileText(written.back(), ToMarkdown(std::span<const EvalReport>(&report, 1)));
  }
  return written;
}

}  // namespace lig
