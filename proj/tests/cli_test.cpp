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

#include <gtest/gtest.h>

#include <fstream>
#include <iostream>
#include <sstream>

#include "json.hpp"
#include "lig/binary_io.hpp"
#include "lig/index.hpp"
#include "test_util.hpp"

namespace lig {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct CliRun {
  int code = 0;
  std::string out;
  std::string err;
};

CliRun Cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  auto* old_out = std::cout.rdbuf(out.rdbuf());
  auto* old_err = std::cerr.rdbuf(err.rdbuf());
  CliRun r;
  r.code = RunCli(args);
  std::cout.rdbuf(old_out);
  std::cerr.rdbuf(old_err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = new fs::path(testing::TempDir("cli"));
    const CliRun r = Cli({"synth-gen", "--out-dir", (*root_ / "data").string(), "--images-per-class", "10"});
    ASSERT_EQ(r.code, kExitOk) << r.err;
  }
  static void TearDownTestSuite() {
    fs::remove_all(*root_);
    delete root_;
  }

  static fs::path Root() { return *root_; }
  static std::string Ann() { return (*root_ / "data" / "annotations.json").string(); }
  static std::string Emb() { return (*root_ / "data" / "embeddings.bin").string(); }
  static std::vector<std::string> Data(std::vector<std::string> head) {
    head.insert(head.end(), {"--annotations", Ann(), "--embeddings", Emb()});
    return head;
  }
  static std::vector<std::string> With(std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
  }

 private:
  static fs::path* root_;
};

fs::path* CliTest::root_ = nullptr;

TEST_F(CliTest, UsageErrors) {
  CliRun r = Cli({"bogus"});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE((r.out + r.err).find("Usage"), std::string::npos);
  EXPECT_EQ(Cli({}).code, kExitUsage);
  EXPECT_EQ(Cli(Data({"run-pdc", "--out-dir", "x", "--fusion", "bogus"})).code, kExitUsage);
  EXPECT_EQ(Cli(Data({"run-pdc", "--out-dir", "x", "--merge", "min"})).code, kExitUsage);
  EXPECT_EQ(Cli(Data({"run-baseline", "--out-dir", "x", "--kind", "nope"})).code, kExitUsage);
  EXPECT_EQ(Cli({"run-pdc", "--out-dir", "x"}).code, kExitUsage);  // required options
  EXPECT_EQ(Cli({"synth-gen", "--out-dir", "x", "--preset", "hard"}).code, kExitUsage);
  EXPECT_EQ(Cli({"--help"}).code, kExitOk);
}

TEST_F(CliTest, SynthGenWritesLoadableFilesAndManifest) {
  const json manifest = json::parse(Slurp(Root() / "data" / "manifest.json"));
  const auto outputs = manifest.at("runs").at("synth-gen").at("outputs").get<std::vector<std::string>>();
  EXPECT_EQ(outputs, (std::vector<std::string>{"annotations.json", "embeddings.bin"}));
  EXPECT_EQ(manifest["runs"]["synth-gen"]["config"]["synth"]["images_per_class"], 10);
}

TEST_F(CliTest, BuildIndex) {
  const fs::path out = Root() / "index";
  const CliRun r = Cli(Data({"build-index", "--out-dir", out.string()}));
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const VectorIndex index = VectorIndex::Load(out / "index.bin");
  EXPECT_EQ(index.size(), kPatchesPerImage * 40);
  EXPECT_EQ(index.num_images(), 40u);
  EXPECT_EQ(json::parse(index.metadata()).at("command"), "build-index");

  const fs::path again = Root() / "index2.bin";
  ASSERT_EQ(Cli(Data({"build-index", "--out", again.string()})).code, kExitOk);
  EXPECT_EQ(Slurp(again), Slurp(out / "index.bin"));

  ASSERT_EQ(Cli(Data({"build-index", "--out", again.string(), "--split", "train", "--fold", "1"})).code,
            kExitOk);
  EXPECT_EQ(VectorIndex::Load(again).num_images(), 32u);
  EXPECT_EQ(Cli(Data({"build-index", "--out", again.string(), "--split", "test", "--fold", "5"})).code,
            kExitFailure);
}

TEST_F(CliTest, MissingBundleFails) {
  const CliRun r = Cli({"build-index", "--annotations", Ann(), "--embeddings",
                     (Root() / "nope.bin").string(), "--out-dir", (Root() / "nb").string()});
  EXPECT_EQ(r.code, kExitFailure);
  EXPECT_NE(r.err.find("MissingEmbedding"), std::string::npos) << r.err;
}

TEST_F(CliTest, RunPdcWritesOneSetPerFoldAndClass) {
  const fs::path out = Root() / "pdc1";
  const CliRun r = Cli(Data({"run-pdc", "--out-dir", out.string(), "--max-pairs", "1"}));
  ASSERT_EQ(r.code, kExitOk) << r.err;
  for (int f = 0; f < 5; ++f) {
    int files = 0;
    for (const auto& entry : fs::directory_iterator(out / ("fold_" + std::to_string(f)))) {
      const json set = json::parse(Slurp(entry.path()));
      EXPECT_EQ(set.at("pairs").size(), 1u);
      EXPECT_EQ(set.at("config").at("fold"), f);
      ++files;
    }
    EXPECT_EQ(files, 4);
  }
  const json manifest = json::parse(Slurp(out / "manifest.json"));
  EXPECT_EQ(manifest["runs"]["run-pdc"]["outputs"].size(), 20u);

  const fs::path again = Root() / "pdc1b";
  ASSERT_EQ(Cli(Data({"run-pdc", "--out-dir", again.string(), "--max-pairs", "1", "--jobs", "3"})).code,
            kExitOk);
  EXPECT_EQ(Slurp(again / "fold_2" / "class_3.json"), Slurp(out / "fold_2" / "class_3.json"));
}

TEST_F(CliTest, ConfigFilePrecedence) {
  const fs::path cfg = Root() / "run.ini";
  {
    std::ofstream f(cfg);
    f << "[run-pdc]\nmax-pairs = 1\nk = 50\n";
  }
  const fs::path a = Root() / "cfg_a";
  ASSERT_EQ(Cli(Data({"--config", cfg.string(), "run-pdc", "--out-dir", a.string()})).code, kExitOk);
  const json sa = json::parse(Slurp(a / "fold_0" / "class_1.json"));
  EXPECT_EQ(sa["config"]["pdc"]["max_pairs"], 1);
  EXPECT_EQ(sa["config"]["pdc"]["k"], 50);

  const fs::path b = Root() / "cfg_b";
  ASSERT_EQ(Cli(Data({"--config", cfg.string(), "run-pdc", "--out-dir", b.string(), "--max-pairs", "2"})).code,
            kExitOk);
  const json sb = json::parse(Slurp(b / "fold_0" / "class_1.json"));
  EXPECT_EQ(sb["config"]["pdc"]["max_pairs"], 2);
  EXPECT_EQ(sb["config"]["pdc"]["k"], 50);
  EXPECT_LE(sb["pairs"].size(), 2u);

  EXPECT_EQ(Cli(Data({"--config", (Root() / "missing.ini").string(), "run-pdc", "--out-dir", "x"})).code,
            kExitUsage);
}

TEST_F(CliTest, BaselinesAndPartialFailure) {
  const fs::path pdc = Root() / "pdc_for_match";
  ASSERT_EQ(Cli(Data({"run-pdc", "--out-dir", pdc.string()})).code, kExitOk);
  const fs::path rp = Root() / "rp";
  const CliRun r = Cli(Data({"run-baseline", "--kind", "random_pairs", "--out-dir", rp.string(),
                          "--match-dir", pdc.string()}));
  ASSERT_EQ(r.code, kExitOk) << r.err;
  for (int f = 0; f < 5; ++f) {
    for (int c = 1; c <= 4; ++c) {
      const std::string file = "fold_" + std::to_string(f) + "/class_" + std::to_string(c) + ".json";
      EXPECT_EQ(json::parse(Slurp(rp / file))["pairs"].size(), json::parse(Slurp(pdc / file))["pairs"].size());
    }
  }
  for (const char* kind : {"original_texts", "random_bboxes", "mean_shift"}) {
    EXPECT_EQ(Cli(Data({"run-baseline", "--kind", kind, "--out-dir", (Root() / kind).string()})).code,
              kExitOk)
        << kind;
  }
  // Every class pool is smaller than 1000 boxes: each set fails, the run finishes.
  const CliRun partial = Cli(Data({"run-baseline", "--kind", "random_bboxes", "--n-examples", "1000",
                                "--out-dir", (Root() / "too_many").string()}));
  EXPECT_EQ(partial.code, kExitPartial);
  EXPECT_NE(partial.err.find("PoolTooSmall"), std::string::npos);
  EXPECT_EQ(Cli(Data({"run-baseline", "--kind", "original_pairs", "--out-dir", "x"})).code, kExitFailure);
}

TEST_F(CliTest, EvaluateAndMaskedDiagnostics) {
  const fs::path pdc = Root() / "pdc_eval";
  ASSERT_EQ(Cli(Data({"run-pdc", "--out-dir", pdc.string()})).code, kExitOk);
  const fs::path rep = Root() / "reports";
  CliRun r = Cli(Data({"evaluate", "--instructions", pdc.string(), "--out-dir", rep.string(), "--name", "pdc",
                    "--formats", "json,csv,md"}));
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("mAP"), std::string::npos);
  r = Cli(Data({"evaluate", "--instructions", pdc.string(), "--out-dir", rep.string(), "--name", "texts",
                "--texts-only", "--formats", "json"}));
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_TRUE(fs::exists(rep / "pdc.json"));
  EXPECT_TRUE(fs::exists(rep / "pdc.csv"));
  EXPECT_TRUE(fs::exists(rep / "pdc.md"));
  EXPECT_FALSE(fs::exists(rep / "texts.csv"));
  const json texts = json::parse(Slurp(rep / "texts.json"));
  EXPECT_EQ(texts["config"]["mask"], "texts_only");
  EXPECT_EQ(texts["method"], "texts");
  const json manifest = json::parse(Slurp(rep / "manifest.json"));
  EXPECT_TRUE(manifest["runs"].contains("evaluate-pdc"));
  EXPECT_TRUE(manifest["runs"].contains("evaluate-texts"));

  EXPECT_EQ(Cli(Data({"evaluate", "--out-dir", rep.string()})).code, kExitFailure);
  EXPECT_EQ(Cli(Data({"evaluate", "--instructions", pdc.string(), "--out-dir", rep.string(), "--texts-only",
                      "--bboxes-only"}))
                .code,
            kExitFailure);
  // Sets made under one fold split cannot be scored under another.
  EXPECT_EQ(Cli(Data({"evaluate", "--instructions", pdc.string(), "--out-dir", rep.string(), "--n-folds",
                      "4"}))
                .code,
            kExitFailure);
}

TEST_F(CliTest, EndToEndIsDeterministic) {
  std::vector<std::string> reports;
  for (int round = 0; round < 2; ++round) {
    const fs::path dir = Root() / "e2e";
    fs::remove_all(dir);
    const std::string data = (dir / "data").string();
    ASSERT_EQ(Cli({"synth-gen", "--out-dir", data, "--images-per-class", "8", "--seed", "3"}).code, kExitOk);
    const std::vector<std::string> io{"--annotations", data + "/annotations.json", "--embeddings",
                                      data + "/embeddings.bin", "--seed", "4"};
    ASSERT_EQ(Cli(With({"build-index", "--out-dir", (dir / "idx").string()}, io)).code, kExitOk);
    ASSERT_EQ(Cli(With({"run-pdc", "--out-dir", (dir / "pdc").string()}, io)).code, kExitOk);
    ASSERT_EQ(Cli(With({"evaluate", "--instructions", (dir / "pdc").string(), "--out-dir",
                        (dir / "rep").string(), "--formats", "json,csv,md"},
                       io))
                  .code,
              kExitOk);
    reports.push_back(Slurp(dir / "rep" / "report.json") + Slurp(dir / "rep" / "report.csv") +
                      Slurp(dir / "rep" / "report.md") + Slurp(dir / "idx" / "index.bin"));
  }
  EXPECT_FALSE(reports[0].empty());
  EXPECT_EQ(reports[0], reports[1]);
}

}  // namespace
}  // namespace lig
