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

#include "lig/cli.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "lig/baselines.hpp"
#include "lig/dataset.hpp"
#include "lig/error.hpp"
#include "lig/eval.hpp"
#include "lig/parallel.hpp"
#include "lig/pdc.hpp"
#include "lig/random.hpp"
#include "lig/synth.hpp"

namespace lig {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct DataOptions {
  std::string annotations;
  std::string format = "simple_json";
  std::string embeddings;
  std::string prompt_template = std::string(kDefaultPromptTemplate);
  std::size_t dimension = 0;  // 0: accept the bundle's
};

struct FoldOptions {
  int n_folds = 5;
  std::uint64_t seed = 0;
};

struct QueryOptions {
  std::string fusion = "sum";
  std::string merge = "max";
  std::size_t k = 1000;
  std::size_t nprobe = 300;
};

struct Options {
  std::size_t jobs = 0;
  std::string out_dir;
  DataOptions data;
  FoldOptions folds;
  QueryOptions query;

  // synth-gen
  std::string preset = "default";
  int n_classes = 4;
  int images_per_class = 50;
  std::size_t synth_dim = 64;
  double noise_sigma = 0.1;
  std::uint64_t synth_seed = 0;

  // build-index
  std::string index_out;
  std::string split = "all";
  int fold = 0;
  std::size_t num_clusters = 0;

  // run-pdc
  std::size_t max_pairs = 4;

  // run-baseline
  std::string kind;
  std::size_t n_examples = 1;
  std::string match_dir;
  std::string original;
  double bandwidth = 0.0;

  // evaluate
  std::string instructions;
  std::string original_instructions;
  bool texts_only = false;
  bool bboxes_only = false;
  std::string name = "report";
  std::vector<std::string> formats = {"json", "csv", "md"};
};

json Snapshot(const DataOptions& d) {
  return {{"annotations", d.annotations}, {"format", d.format}, {"embeddings", d.embeddings},
          {"prompt_template", d.prompt_template}, {"dimension", d.dimension}};
}

json Snapshot(const FoldOptions& f) { return {{"n_folds", f.n_folds}, {"fold_seed", f.seed}}; }

json Snapshot(const QueryOptions& q) {
  return {{"fusion", q.fusion}, {"merge", q.merge}, {"k", q.k}, {"nprobe", q.nprobe}};
}

QueryConfig ToQueryConfig(const QueryOptions& q) {
  QueryConfig c;
  c.policy = *ParseFusionPolicy(q.fusion);
  c.merge = *ParseMergeMode(q.merge);
  c.k = q.k;
  c.nprobe = q.nprobe;
  return c;
}

IndexBuildOptions IndexOptionsFor(const Options& o, std::uint64_t seed) {
  IndexBuildOptions b;
  b.num_clusters = o.num_clusters;
  b.seed = seed;
  b.jobs = o.jobs;
  return b;
}

struct Inputs {
  AnnotatedDataset ds;
  EmbeddingBundle bundle;
};

Inputs LoadInputs(const DataOptions& d, const FoldOptions* folds) {
  const auto format = ParseAnnotationFormat(d.format);
  Inputs in;
  in.ds = LoadAnnotations(d.annotations, *format);
  BundleExpectations expect;
  if (d.dimension > 0) expect.dimension = d.dimension;
  expect.prompt_template = d.prompt_template;
  if (!fs::exists(d.embeddings)) {
    throw Error(ErrorCode::kMissingEmbedding, "embedding bundle not found: " + d.embeddings);
  }
  in.bundle = LoadEmbeddings(d.embeddings, in.ds, expect);
  if (folds != nullptr) in.ds = SplitFolds(in.ds, folds->n_folds, folds->seed);
  return in;
}

fs::path FoldDir(const fs::path& root, int fold) { return root / ("fold_" + std::to_string(fold)); }

fs::path ClassFile(const fs::path& root, int fold, ClassId cls) {
  return FoldDir(root, fold) / ("class_" + std::to_string(cls) + ".json");
}

void WriteManifest(const fs::path& out_dir, const std::string& command, const json& config,
                   std::vector<fs::path> outputs) {
  const fs::path path = out_dir / "manifest.json";
  json manifest = json::object();
  if (fs::exists(path)) {
    try {
      manifest = json::parse(ReadFileText(path));
    } catch (const json::exception&) {
      manifest = json::object();
    }
  }
  std::vector<std::string> rel;
  for (const fs::path& p : outputs) rel.push_back(fs::relative(p, out_dir).generic_string());
  std::sort(rel.begin(), rel.end());
  manifest["runs"][command] = {{"config", config}, {"outputs", rel}};
  WriteFileText(path, manifest.dump(2) + "\n");
}

// ---------------------------------------------------------------------------

int CmdSynthGen(const Options& o) {
  SynthConfig cfg = *SynthPreset(o.preset);
  cfg.n_classes = o.n_classes;
  cfg.images_per_class = o.images_per_class;
  cfg.dimension = o.synth_dim;
  cfg.noise_sigma = o.noise_sigma;
  cfg.seed = o.synth_seed;
  cfg.prompt_template = o.data.prompt_template;
  const SynthWorld world = SynthGenerate(cfg);
  json snapshot = {{"command", "synth-gen"}, {"preset", o.preset}, {"synth", ToJson(cfg)}};

  const fs::path out(o.out_dir);
  const fs::path ann = out / "annotations.json";
  const fs::path emb = out / "embeddings.bin";
  WriteFileText(ann, ToSimpleJson(world.dataset, snapshot.dump()));
  EmbeddingBundle bundle = world.bundle;
  bundle.metadata = snapshot.dump();
  bundle.Save(emb);
  WriteManifest(out, "synth-gen", snapshot, {ann, emb});
  std::cout << "wrote " << world.dataset.images().size() << " images, "
            << world.dataset.boxes().size() << " boxes, " << world.dataset.classes().size()
            << " classes, " << bundle.patch_keys.size() << " patch embeddings to " << out.string()
            << "\n";
  return kExitOk;
}

int CmdBuildIndex(const Options& o) {
  const bool split = o.split != "all";
  Inputs in = LoadInputs(o.data, split ? &o.folds : nullptr);
  std::vector<ImageId> images = in.ds.image_ids();
  if (split) {
    if (o.fold < 0 || o.fold >= o.folds.n_folds) {
      throw Error(ErrorCode::kInvalidConfig, "fold out of range");
    }
    images = o.split == "train" ? in.ds.TrainImages(o.fold) : in.ds.TestImages(o.fold);
  }
  json snapshot = {{"command", "build-index"}, {"data", Snapshot(o.data)},
                   {"split", o.split},         {"num_clusters", o.num_clusters},
                   {"seed", o.folds.seed}};
  if (split) {
    snapshot["fold"] = o.fold;
    snapshot["folds"] = Snapshot(o.folds);
  }
  VectorIndex index = BuildImageIndex(in.bundle, images, IndexOptionsFor(o, o.folds.seed));
  index.set_metadata(snapshot.dump());
  const fs::path out = o.index_out.empty() ? fs::path(o.out_dir) / "index.bin" : fs::path(o.index_out);
  index.Save(out);
  if (!o.out_dir.empty()) WriteManifest(o.out_dir, "build-index", snapshot, {out});
  std::cout << "indexed " << index.size() << " records from " << index.num_images()
            << " images into " << index.num_clusters() << " clusters (dimension "
            << index.dimension() << ") -> " << out.string() << "\n";
  return kExitOk;
}

int CmdRunPdc(const Options& o) {
  Inputs in = LoadInputs(o.data, &o.folds);
  PdcConfig pdc;
  pdc.k = o.query.k;
  pdc.max_pairs = o.max_pairs;
  pdc.fusion = *ParseFusionPolicy(o.query.fusion);
  pdc.merge = *ParseMergeMode(o.query.merge);
  pdc.nprobe = o.query.nprobe;
  pdc.jobs = o.jobs;
  const json snapshot = {{"command", "run-pdc"}, {"data", Snapshot(o.data)},
                         {"folds", Snapshot(o.folds)}, {"pdc", ToJson(pdc)}};
  const fs::path out(o.out_dir);
  std::vector<fs::path> written;
  std::vector<std::string> failures;
  for (int f = 0; f < in.ds.num_folds(); ++f) {
    const std::vector<ImageId> train = in.ds.TrainImages(f);
    const VectorIndex index = BuildImageIndex(in.bundle, train, IndexOptionsFor(o, o.folds.seed));
    for (const ClassInfo& c : in.ds.classes()) {
      try {
        const CandidatePool pool =
            BuildCandidatePool(in.ds, in.bundle, c.id, train, o.data.prompt_template);
        const std::vector<ImageId> positives = in.ds.ImagesWithClass(c.id, train);
        InstructionSet set = GreedySelect(pool, index, positives, pdc);
        set.config = snapshot;
        set.config["fold"] = f;
        written.push_back(ClassFile(out, f, c.id));
        SaveInstructionSet(written.back(), set, in.ds);
        std::cout << "fold " << f << " " << c.name << ": " << set.pairs.size()
                  << " pairs, train AUC " << set.auc_trace.back() << "\n";
      } catch (const Error& e) {
        failures.push_back("fold " + std::to_string(f) + " " + c.name + ": " + e.what());
      }
    }
  }
  WriteManifest(out, "run-pdc", snapshot, written);
  for (const auto& msg : failures) std::cerr << "error: " << msg << "\n";
  std::cout << written.size() << " instruction sets written, " << failures.size() << " failed\n";
  return failures.empty() ? kExitOk : kExitPartial;
}

int CmdRunBaseline(const Options& o) {
  const BaselineKind kind = *ParseBaselineKind(o.kind);
  Inputs in = LoadInputs(o.data, &o.folds);
  std::map<ClassId, InstructionSet> original;
  if (kind == BaselineKind::kOriginalPairs) {
    if (o.original.empty()) throw Error(ErrorCode::kInvalidConfig, "original_pairs needs --original");
    original = ParseOriginalInstructions(json::parse(ReadFileText(o.original)), in.ds, in.bundle,
                                         o.data.prompt_template);
  }
  json snapshot = {{"command", "run-baseline"}, {"kind", o.kind},
                   {"data", Snapshot(o.data)},  {"folds", Snapshot(o.folds)},
                   {"n_examples", o.n_examples}, {"match_dir", o.match_dir}};
  if (kind == BaselineKind::kMeanShift && o.bandwidth > 0) snapshot["bandwidth"] = o.bandwidth;
  const fs::path out(o.out_dir);
  std::vector<fs::path> written;
  std::vector<std::string> failures;
  for (int f = 0; f < in.ds.num_folds(); ++f) {
    const std::vector<ImageId> train = in.ds.TrainImages(f);
    for (const ClassInfo& c : in.ds.classes()) {
      try {
        const CandidatePool pool =
            BuildCandidatePool(in.ds, in.bundle, c.id, train, o.data.prompt_template);
        std::size_t n = o.n_examples;
        if (!o.match_dir.empty()) {
          const json matched = json::parse(ReadFileText(ClassFile(o.match_dir, f, c.id)));
          n = matched.at("pairs").size();
        }
        const std::uint64_t seed = MixSeed(o.folds.seed, static_cast<std::uint64_t>(f) * 1000003u +
                                                             static_cast<std::uint64_t>(c.id));
        InstructionSet set;
        switch (kind) {
          case BaselineKind::kOriginalTexts: set = OriginalTexts(pool); break;
          case BaselineKind::kRandomBBoxes: set = RandomBBoxes(pool, n, seed); break;
          case BaselineKind::kRandomPairs: set = RandomPairs(pool, n, seed); break;
          case BaselineKind::kOriginalPairs: set = OriginalPairs(original, pool); break;
          case BaselineKind::kMeanShift: {
            MeanShiftOptions ms;
            if (o.bandwidth > 0) ms.bandwidth = o.bandwidth;
            set = MeanShiftExamples(pool, ms);
            break;
          }
        }
        const json details = set.config;
        set.config = snapshot;
        set.config["fold"] = f;
        if (!details.empty()) set.config["details"] = details;
        written.push_back(ClassFile(out, f, c.id));
        SaveInstructionSet(written.back(), set, in.ds);
      } catch (const Error& e) {
        failures.push_back("fold " + std::to_string(f) + " " + c.name + ": " + e.what());
      } catch (const json::exception& e) {
        failures.push_back("fold " + std::to_string(f) + " " + c.name + ": " + e.what());
      }
    }
  }
  WriteManifest(out, "run-baseline-" + o.kind, snapshot, written);
  for (const auto& msg : failures) std::cerr << "error: " << msg << "\n";
  std::cout << written.size() << " instruction sets written, " << failures.size() << " failed\n";
  return failures.empty() ? kExitOk : kExitPartial;
}

int CmdEvaluate(const Options& o) {
  if (o.instructions.empty() == o.original_instructions.empty()) {
    throw Error(ErrorCode::kInvalidConfig,
                "give exactly one of --instructions or --original-instructions");
  }
  if (o.texts_only && o.bboxes_only) {
    throw Error(ErrorCode::kInvalidConfig, "--texts-only and --bboxes-only are exclusive");
  }
  Inputs in = LoadInputs(o.data, &o.folds);
  std::map<ClassId, InstructionSet> original;
  if (!o.original_instructions.empty()) {
    original = ParseOriginalInstructions(json::parse(ReadFileText(o.original_instructions)), in.ds,
                                         in.bundle, o.data.prompt_template);
  }
  Method method = [&](const FoldContext& ctx) {
    std::map<ClassId, InstructionSet> sets;
    if (!o.original_instructions.empty()) return original;
    for (const ClassInfo& c : ctx.dataset().classes()) {
      const fs::path file = ClassFile(o.instructions, ctx.fold(), c.id);
      if (!fs::exists(file)) continue;
      InstructionSet set = LoadInstructionSet(file, ctx.dataset(), ctx.bundle(), o.data.prompt_template);
      const json& cfg = set.config;
      if (cfg.contains("folds") && cfg["folds"] != Snapshot(o.folds)) {
        throw Error(ErrorCode::kInvalidConfig,
                    file.string() + " was produced with a different fold split " + cfg["folds"].dump());
      }
      sets.emplace(c.id, std::move(set));
    }
    return sets;
  };
  CrossFoldConfig cf;
  cf.method_name = o.name;
  cf.query = ToQueryConfig(o.query);
  cf.mask = o.texts_only ? ModalityMask::kTextsOnly
            : o.bboxes_only ? ModalityMask::kBBoxesOnly
                            : ModalityMask::kBoth;
  cf.index = IndexOptionsFor(o, o.folds.seed);
  cf.jobs = o.jobs;
  EvalReport report = CrossFold(in.ds, in.bundle, method, cf);
  report.config["run"] = {{"command", "evaluate"},
                          {"data", Snapshot(o.data)},
                          {"folds", Snapshot(o.folds)},
                          {"query", Snapshot(o.query)},
                          {"instructions", o.instructions},
                          {"original_instructions", o.original_instructions},
                          {"texts_only", o.texts_only},
                          {"bboxes_only", o.bboxes_only},
                          {"num_clusters", o.num_clusters}};
  EmitFormats formats{false, false, false};
  for (const std::string& f : o.formats) {
    if (f == "json") formats.json = true;
    if (f == "csv") formats.csv = true;
    if (f == "md" || f == "markdown") formats.markdown = true;
  }
  const auto written = EmitReport(report, o.out_dir, o.name, formats);
  WriteManifest(o.out_dir, "evaluate-" + o.name, report.config["run"], written);
  std::ostringstream summary;
  summary << "mAP " << report.map;
  for (const ClassReport& c : report.per_class) summary << " | " << c.name << " " << c.ap_mean;
  std::cout << summary.str() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

void AddDataOptions(CLI::App* cmd, Options& o) {
  cmd->add_option("--annotations", o.data.annotations, "Annotation JSON file")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--format", o.data.format, "Annotation schema")
      ->check(CLI::IsMember({"coco_json", "simple_json"}))
      ->capture_default_str();
  cmd->add_option("--embeddings", o.data.embeddings, "Embedding bundle file")->required();
  cmd->add_option("--prompt-template", o.data.prompt_template, "Prompt template, {} is the word")
      ->capture_default_str();
  cmd->add_option("--dim", o.data.dimension, "Expected embedding dimension (0 accepts any)")
      ->capture_default_str();
}

void AddFoldOptions(CLI::App* cmd, Options& o) {
  cmd->add_option("--n-folds", o.folds.n_folds, "Number of folds")
      ->check(CLI::Range(2, 1000))
      ->capture_default_str();
  cmd->add_option("--seed", o.folds.seed, "Seed for folds, clustering and sampling")
      ->capture_default_str();
}

void AddQueryOptions(CLI::App* cmd, Options& o) {
  cmd->add_option("--fusion", o.query.fusion, "Query fusion policy")
      ->check(CLI::IsMember({"single_text", "single_visual", "sum", "weighted", "rank", "naive"}))
      ->capture_default_str();
  cmd->add_option("--merge", o.query.merge, "How results of several queries combine")
      ->check(CLI::IsMember({"max", "avg"}))
      ->capture_default_str();
  cmd->add_option("--k", o.query.k, "Images retrieved per query")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--nprobe", o.query.nprobe, "Index lists visited per query")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

}  // namespace

int RunCli(const std::vector<std::string>& args) {
  CLI::App app{"Labeling-instruction mining over precomputed embeddings", "lig"};
  app.set_config("--config", "", "INI-style key = value file; [subcommand] sections allowed");
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("--jobs", o.jobs, "Worker threads (0 = all cores)")->capture_default_str();

  auto* synth = app.add_subcommand("synth-gen", "Generate a seeded synthetic dataset and bundle");
  synth->add_option("--out-dir", o.out_dir, "Output directory")->required();
  synth->add_option("--preset", o.preset, "World preset")
      ->check(CLI::IsMember({"default", "text_ambiguous"}))
      ->capture_default_str();
  synth->add_option("--n-classes", o.n_classes, "Classes")->capture_default_str();
  synth->add_option("--images-per-class", o.images_per_class, "Images per class")->capture_default_str();
  synth->add_option("--dim", o.synth_dim, "Embedding dimension")->capture_default_str();
  synth->add_option("--noise-sigma", o.noise_sigma, "Noise scale")->capture_default_str();
  synth->add_option("--seed", o.synth_seed, "Generator seed")->capture_default_str();
  synth->add_option("--prompt-template", o.data.prompt_template, "Prompt template")->capture_default_str();

  auto* build = app.add_subcommand("build-index", "Build and save a patch index");
  AddDataOptions(build, o);
  AddFoldOptions(build, o);
  build->add_option("--out-dir", o.out_dir, "Directory for index.bin and manifest");
  build->add_option("--out", o.index_out, "Index file path (overrides --out-dir/index.bin)");
  build->add_option("--split", o.split, "Images to index")
      ->check(CLI::IsMember({"all", "train", "test"}))
      ->capture_default_str();
  build->add_option("--fold", o.fold, "Fold for --split train/test")->capture_default_str();
  build->add_option("--num-clusters", o.num_clusters, "Inverted lists (0 = ceil(sqrt(N)))")
      ->capture_default_str();

  auto* pdc = app.add_subcommand("run-pdc", "Greedy instruction-pair selection per fold and class");
  AddDataOptions(pdc, o);
  AddFoldOptions(pdc, o);
  AddQueryOptions(pdc, o);
  pdc->add_option("--out-dir", o.out_dir, "Output directory")->required();
  pdc->add_option("--max-pairs", o.max_pairs, "Maximum pairs per class")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  pdc->add_option("--num-clusters", o.num_clusters, "Inverted lists (0 = ceil(sqrt(N)))");

  auto* baseline = app.add_subcommand("run-baseline", "Produce baseline instruction sets");
  AddDataOptions(baseline, o);
  AddFoldOptions(baseline, o);
  baseline->add_option("--kind", o.kind, "Baseline")
      ->required()
      ->check(CLI::IsMember(
          {"original_texts", "original_pairs", "random_bboxes", "random_pairs", "mean_shift"}));
  baseline->add_option("--out-dir", o.out_dir, "Output directory")->required();
  baseline->add_option("--n-examples", o.n_examples, "Examples per class for random baselines")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  baseline->add_option("--match-dir", o.match_dir,
                       "run-pdc output whose per-class set sizes the random baselines copy");
  baseline->add_option("--original", o.original, "Original-instruction JSON for original_pairs");
  baseline->add_option("--bandwidth", o.bandwidth, "Mean-shift bandwidth (0 = estimate)");

  auto* evaluate = app.add_subcommand("evaluate", "Cross-fold evaluation of instruction sets");
  AddDataOptions(evaluate, o);
  AddFoldOptions(evaluate, o);
  AddQueryOptions(evaluate, o);
  evaluate->add_option("--instructions", o.instructions, "Directory written by run-pdc/run-baseline");
  evaluate->add_option("--original-instructions", o.original_instructions,
                       "Original-instruction JSON, applied to every fold");
  evaluate->add_flag("--texts-only", o.texts_only, "Query with the sets' words only");
  evaluate->add_flag("--bboxes-only", o.bboxes_only, "Query with the sets' boxes only");
  evaluate->add_option("--out-dir", o.out_dir, "Output directory")->required();
  evaluate->add_option("--name", o.name, "Report name (file stem and method column)")
      ->capture_default_str();
  evaluate->add_option("--formats", o.formats, "Any of json, csv, md")->delimiter(',');
  evaluate->add_option("--num-clusters", o.num_clusters, "Inverted lists (0 = ceil(sqrt(N)))");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return kExitUsage;
  }

  try {
    if (*synth) return CmdSynthGen(o);
    if (*build) return CmdBuildIndex(o);
    if (*pdc) return CmdRunPdc(o);
    if (*baseline) return CmdRunBaseline(o);
    if (*evaluate) return CmdEvaluate(o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

int RunCli(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return RunCli(args);
}

}  // namespace lig
