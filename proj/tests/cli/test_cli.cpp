// Copyright 2026 The ninkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Drives the ninkit executables as a user would. Fixtures are written with the
// 32-bit library so checkpoints match the `ninkit` binary.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

#include "ninkit/data.hpp"
#include "ninkit/model.hpp"
#include "ninkit/optim.hpp"

namespace fs = std::filesystem;
using namespace ninkit;

namespace {

struct Outcome {
  int code = -1;
  std::string out;
};

Outcome run(const std::string& args) {
  const std::string cmd = args + " 2>&1";
  Outcome r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  for (std::size_t n; (n = std::fread(buf, 1, sizeof(buf), p)) > 0;) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

const std::string kBin = NINKIT_BIN;
const std::string kBin64 = NINKIT64_BIN;
const std::string kConfigs = NINKIT_CONFIG_DIR;

// Four classes on 4x4 images; class k lights channel k everywhere.
constexpr std::size_t kClasses = 4;

Dataset one_hot_set(std::size_t n, std::size_t classes) {
  Dataset d;
  d.classes = classes;
  d.split = "test";
  d.images = Tensor4::zeros({n, kClasses, 4, 4});
  for (std::size_t i = 0; i < n; ++i) {
    const Label y = static_cast<Label>(i % classes);
    d.labels.push_back(y);
    for (std::size_t h = 0; h < 4; ++h)
      for (std::size_t w = 0; w < 4; ++w) d.images(i, y, h, w) = 1;
  }
  return d;
}

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = fs::temp_directory_path() / ("ninkit_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir_);
    std::ofstream(dir_ / "id.nin") << "input channels=4 height=4 width=4 classes=4\n"
                                      "cccp output=4\n"
                                      "gap\n";
    std::ofstream(dir_ / "tiny.nin") << "input channels=4 height=4 width=4 classes=4\n"
                                        "conv kernel=3 output=6 pad=1\nrelu\n"
                                        "cccp output=4\nrelu\n"
                                        "dropout ratio=0.5\n"
                                        "gap\n";
    save_dataset(one_hot_set(12, kClasses), dir_ / "test.nds");
    Dataset train = one_hot_set(40, kClasses);
    train.split = "train";
    save_dataset(train, dir_ / "train.nds");
    save_dataset(one_hot_set(12, 3), dir_ / "three.nds");

    // Identity 1x1 weights: logits equal the one-hot input means.
    Network net = Network::init(load_config(dir_ / "id.nin"), 1);
    auto params = net.parameters();
    params[0]->value.set_zero();
    params[1]->value.set_zero();
    for (std::size_t k = 0; k < kClasses; ++k) params[0]->value(k, k, 0, 0) = 1;
    save_checkpoint(dir_ / "id.ckpt", net, TrainState{});
  }
  static void TearDownTestSuite() { fs::remove_all(dir_); }

  static std::string path(const std::string& name) { return (dir_ / name).string(); }
  static std::string eval_args() {
    return kBin + " eval --config " + path("id.nin") + " --checkpoint " + path("id.ckpt") +
           " --test-file " + path("test.nds");
  }
  static std::string train_args(const std::string& out) {
    return kBin + " train --config " + path("tiny.nin") + " --train-file " + path("train.nds") +
           " --test-file " + path("test.nds") +
           " --epochs 3 --schedule fixed --batch 8 --lr 0.05 --seed 7 --quiet --out " + path(out);
  }

  static inline fs::path dir_;
};

TEST_F(Cli, HelpListsEveryTrainFlag) {
  const Outcome r = run(kBin + " train --help");
  EXPECT_EQ(r.code, 0);
  for (const char* flag :
       {"--config", "--head", "--head-dropout", "--data", "--dataset", "--train-file",
        "--test-file", "--train-limit", "--test-limit", "--out", "--seed", "--init-std", "--lr",
        "--momentum", "--weight-decay", "--batch", "--epochs", "--schedule", "--drop-epochs",
        "--patience", "--min-delta", "--max-drops", "--drop-factor", "--augment", "--val-tail",
        "--train-measure", "--workers", "--record-time", "--resume", "--quiet",
        "--dump-manifest"}) {
    EXPECT_NE(r.out.find(flag), std::string::npos) << flag;
  }
}

TEST_F(Cli, HelpListsOtherSubcommands) {
  const Outcome r = run(kBin + " --help");
  EXPECT_EQ(r.code, 0);
  for (const char* sub :
       {"train", "eval", "gradcheck", "visualize", "preprocess", "curves", "--manifest"}) {
    EXPECT_NE(r.out.find(sub), std::string::npos) << sub;
  }
  const Outcome v = run(kBin + " visualize --help");
  for (const char* flag : {"--checkpoint", "--indices", "--fraction", "--threshold-scope",
                           "--cell", "--split"}) {
    EXPECT_NE(v.out.find(flag), std::string::npos) << flag;
  }
}

TEST_F(Cli, UnknownFlagIsUsageError) {
  EXPECT_EQ(run(kBin + " train --no-such-flag").code, 2);
  EXPECT_EQ(run(kBin).code, 2);
}

TEST_F(Cli, OneHotCheckpointScoresZeroError) {
  const Outcome r = run(eval_args());
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(r.out, "error_rate=0.0000\n");
}

TEST_F(Cli, EvalTwiceIsIdentical) {
  const std::string args = kBin + " eval --config " + path("tiny.nin") + " --checkpoint " +
                           path("tiny_ckpt") + " --test-file " + path("test.nds");
  ASSERT_EQ(run(train_args("tiny_run")).code, 0);
  fs::copy_file(dir_ / "tiny_run" / "last.ckpt", dir_ / "tiny_ckpt",
                fs::copy_options::overwrite_existing);
  const Outcome a = run(args), b = run(args);
  EXPECT_EQ(a.code, 0) << a.out;
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(a.out.rfind("error_rate=", 0), 0u);
}

TEST_F(Cli, SixtyFourBitBuildReadsThirtyTwoBitCheckpoint) {
  const Outcome r = run(kBin64 + eval_args().substr(kBin.size()));
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(r.out, "error_rate=0.0000\n");
}

TEST_F(Cli, ThirtyTwoBitBuildRefusesSixtyFourBitCheckpoint) {
  const std::string args = train_args("wide").substr(kBin.size());
  ASSERT_EQ(run(kBin64 + args).code, 0);
  const Outcome r = run(kBin + " eval --config " + path("tiny.nin") + " --checkpoint " +
                        path("wide/last.ckpt") + " --test-file " + path("test.nds"));
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.out.find("64-bit"), std::string::npos) << r.out;
}

TEST_F(Cli, WrongClassCountIsDataError) {
  const Outcome r = run(kBin + " eval --config " + path("id.nin") + " --checkpoint " +
                    path("id.ckpt") + " --test-file " + path("three.nds"));
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.out.find("3 classes"), std::string::npos) << r.out;
}

TEST_F(Cli, CheckpointFromAnotherConfigIsRejected) {
  const Outcome r = run(kBin + " eval --config " + path("tiny.nin") + " --checkpoint " +
                    path("id.ckpt") + " --test-file " + path("test.nds"));
  EXPECT_EQ(r.code, 3) << r.out;
}

TEST_F(Cli, TrainPrintsTestErrorAndIsDeterministic) {
  const Outcome a = run(train_args("det_a"));
  const Outcome b = run(train_args("det_b"));
  ASSERT_EQ(a.code, 0) << a.out;
  EXPECT_NE(a.out.find("test_error="), std::string::npos);
  EXPECT_EQ(a.out, b.out);
  for (const char* f : {"metrics.csv", "last.ckpt", "best.ckpt"}) {
    EXPECT_EQ(slurp(dir_ / "det_a" / f), slurp(dir_ / "det_b" / f)) << f;
  }
}

TEST_F(Cli, DumpManifestRerunIsEquivalent) {
  const std::string flags = " --augment translate=1,flip --drop-epochs 2 --workers 2";
  ASSERT_EQ(run(train_args("direct") + flags).code, 0);
  const Outcome d = run(train_args("from_manifest") + flags + " --dump-manifest " + path("m.ini"));
  ASSERT_EQ(d.code, 0) << d.out;
  EXPECT_FALSE(fs::exists(dir_ / "from_manifest"));
  const Outcome r = run(kBin + " train --manifest " + path("m.ini"));
  ASSERT_EQ(r.code, 0) << r.out;
  for (const char* f : {"metrics.csv", "last.ckpt"}) {
    EXPECT_EQ(slurp(dir_ / "direct" / f), slurp(dir_ / "from_manifest" / f)) << f;
  }
}

TEST_F(Cli, ManifestValuesYieldToFlags) {
  ASSERT_EQ(run(train_args("m_run") + " --dump-manifest " + path("m2.ini")).code, 0);
  ASSERT_EQ(run(kBin + " train --manifest " + path("m2.ini") + " --epochs 5 --dump-manifest " +
                path("m3.ini")).code, 0);
  const std::string a = slurp(dir_ / "m2.ini"), b = slurp(dir_ / "m3.ini");
  EXPECT_NE(a.find("epochs=3\n"), std::string::npos) << a;
  EXPECT_NE(b.find("epochs=5\n"), std::string::npos) << b;
}

TEST_F(Cli, VisualizeWritesOnePanelPerIndex) {
  const std::string out = path("panels");
  const Outcome r = run(kBin + " visualize --config " + path("id.nin") + " --checkpoint " +
                    path("id.ckpt") + " --test-file " + path("test.nds") +
                    " --indices 0,1,2,3,4,5,6,7,8,9 --cell 8 --out " + out);
  ASSERT_EQ(r.code, 0) << r.out;
  std::size_t panels = 0;
  for (const auto& e : fs::directory_iterator(out)) {
    if (e.path().extension() == ".ppm") {
      ++panels;
      EXPECT_EQ(slurp(e.path()).rfind("P6\n", 0), 0u);
    }
  }
  EXPECT_EQ(panels, 10u);
}

TEST_F(Cli, VisualizeOutOfRangeListsValidRange) {
  const Outcome r = run(kBin + " visualize --config " + path("id.nin") + " --checkpoint " +
                    path("id.ckpt") + " --test-file " + path("test.nds") + " --indices 12 --out " +
                    path("bad_panels"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("0..11"), std::string::npos) << r.out;
}

TEST_F(Cli, GradcheckNeeds64BitBuild) {
  EXPECT_EQ(run(kBin + " gradcheck --config " + kConfigs + "/mnist.nin").code, 2);
}

TEST_F(Cli, GradcheckPassesOnBundledConfig) {
  const Outcome r = run(kBin64 + " gradcheck --config " + kConfigs + "/cifar10.nin --seed 3");
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("gradcheck passed"), std::string::npos);
}

TEST_F(Cli, GradcheckToleranceViolationExitsFour) {
  const Outcome r =
      run(kBin64 + " gradcheck --config " + kConfigs + "/mnist.nin --tolerance 1e-30");
  EXPECT_EQ(r.code, 4) << r.out;
  EXPECT_NE(r.out.find("FAILED at"), std::string::npos);
}

TEST_F(Cli, BadConfigLineIsUsageError) {
  std::ofstream(dir_ / "bad.nin") << "input channels=1 height=4 width=4 classes=2\nfrobnicate\n";
  const Outcome r = run(kBin64 + " gradcheck --config " + path("bad.nin"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("line 2"), std::string::npos) << r.out;
}

TEST_F(Cli, PreprocessWritesDatasets) {
  const Outcome r = run(kBin + " preprocess --train-file " + path("train.nds") + " --test-file " +
                    path("test.nds") + " --steps gcn,zca --out " + path("pre"));
  ASSERT_EQ(r.code, 0) << r.out;
  for (const char* f : {"train.nds", "test.nds", "zca.bin"}) {
    EXPECT_TRUE(fs::exists(dir_ / "pre" / f)) << f;
  }
  EXPECT_EQ(load_dataset(dir_ / "pre" / "train.nds").size(), 40u);
}

TEST_F(Cli, CurvesMergesRuns) {
  ASSERT_EQ(run(train_args("curve_run")).code, 0);
  const Outcome r = run(kBin + " curves " + path("curve_run/metrics.csv") + " --out " +
                    path("curves.csv"));
  ASSERT_EQ(r.code, 0) << r.out;
  const std::string csv = slurp(dir_ / "curves.csv");
  EXPECT_EQ(csv.rfind("run,epoch,split,error\n", 0), 0u);
  EXPECT_NE(csv.find("curve_run,3,train,"), std::string::npos) << csv;
}

}  // namespace
