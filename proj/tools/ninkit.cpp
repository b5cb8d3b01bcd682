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

// Command-line front end: train, eval, gradcheck, visualize, preprocess and
// curves. Built twice, as `ninkit` (32-bit reals) and `ninkit64`.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ninkit/data.hpp"
#include "ninkit/gradcheck.hpp"
#include "ninkit/model.hpp"
#include "ninkit/optim.hpp"
#include "ninkit/viz.hpp"

namespace fs = std::filesystem;
using namespace ninkit;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

// ----------------------------------------------------------------- datasets

struct DataArgs {
  std::string dir;
  std::string kind = "auto";
  std::string train_file;
  std::string test_file;
  std::size_t train_limit = 0;
  std::size_t test_limit = 0;

  void add_to(CLI::App& app) {
    app.add_option("--data", dir, "Dataset directory (default: $NINKIT_DATA_DIR)")
        ->envname("NINKIT_DATA_DIR");
    app.add_option("--dataset", kind, "Dataset layout in --data")
        ->check(CLI::IsMember({"auto", "mnist", "cifar10", "cifar100", "svhn"}))
        ->capture_default_str();
    app.add_option("--train-file", train_file, "Training set in ninkit dataset format");
    app.add_option("--test-file", test_file, "Test set in ninkit dataset format");
    app.add_option("--train-limit", train_limit, "Keep only the first N training images (0 = all)")
        ->capture_default_str();
    app.add_option("--test-limit", test_limit, "Keep only the first N test images (0 = all)")
        ->capture_default_str();
  }
};

struct Splits {
  std::optional<Dataset> train;
  std::optional<Dataset> test;
};

std::optional<fs::path> first_existing(const fs::path& dir, std::initializer_list<const char*> names) {
  for (const char* name : names) {
    if (fs::exists(dir / name)) return dir / name;
  }
  return std::nullopt;
}

std::string detect_kind(const fs::path& dir) {
  if (first_existing(dir, {"train-images-idx3-ubyte", "train-images.idx3-ubyte"})) return "mnist";
  if (first_existing(dir, {"data_batch_1.bin", "cifar-10-batches-bin/data_batch_1.bin"})) {
    return "cifar10";
  }
  if (first_existing(dir, {"cifar-100-binary/train.bin"}) ||
      (fs::exists(dir / "train.bin") && fs::exists(dir / "test.bin"))) {
    return "cifar100";
  }
  if (first_existing(dir, {"svhn_train.bin"})) return "svhn";
  throw DataError("cannot recognize a dataset in " + dir.string() +
                  " (expected MNIST IDX, CIFAR binary or SVHN record files)");
}

fs::path require(const fs::path& dir, std::initializer_list<const char*> names) {
  if (auto p = first_existing(dir, names)) return *p;
  throw DataError("missing " + std::string(*names.begin()) + " in " + dir.string());
}

Splits load_directory(const fs::path& dir, std::string kind) {
  if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir.string());
  if (kind == "auto") kind = detect_kind(dir);
  Splits s;
  if (kind == "mnist") {
    s.train = load_mnist(require(dir, {"train-images-idx3-ubyte", "train-images.idx3-ubyte"}),
                         require(dir, {"train-labels-idx1-ubyte", "train-labels.idx1-ubyte"}));
    s.test = load_mnist(require(dir, {"t10k-images-idx3-ubyte", "t10k-images.idx3-ubyte"}),
                        require(dir, {"t10k-labels-idx1-ubyte", "t10k-labels.idx1-ubyte"}));
  } else if (kind == "cifar10") {
    fs::path base = fs::exists(dir / "cifar-10-batches-bin") ? dir / "cifar-10-batches-bin" : dir;
    std::vector<fs::path> train;
    for (int i = 1; i <= 5; ++i) {
      train.push_back(require(base, {("data_batch_" + std::to_string(i) + ".bin").c_str()}));
    }
    std::vector<fs::path> test{require(base, {"test_batch.bin"})};
    s.train = load_cifar(train, 10);
    s.test = load_cifar(test, 10);
  } else if (kind == "cifar100") {
    fs::path base = fs::exists(dir / "cifar-100-binary") ? dir / "cifar-100-binary" : dir;
    std::vector<fs::path> train{require(base, {"train.bin"})};
    std::vector<fs::path> test{require(base, {"test.bin"})};
    s.train = load_cifar(train, 100);
    s.test = load_cifar(test, 100);
  } else {
    std::vector<fs::path> train{require(dir, {"svhn_train.bin"})};
    if (auto extra = first_existing(dir, {"svhn_extra.bin"})) train.push_back(*extra);
    std::vector<fs::path> test{require(dir, {"svhn_test.bin"})};
    s.train = load_records(train, 1, 0, {1, 3, 32, 32}, 10);
    s.test = load_records(test, 1, 0, {1, 3, 32, 32}, 10);
  }
  s.train->split = "train";
  s.test->split = "test";
  return s;
}

Splits load_splits(const DataArgs& a) {
  Splits s;
  if (!a.dir.empty()) s = load_directory(a.dir, a.kind);
  if (!a.train_file.empty()) s.train = load_dataset(a.train_file);
  if (!a.test_file.empty()) s.test = load_dataset(a.test_file);
  if (s.train && a.train_limit > 0 && a.train_limit < s.train->size()) {
    s.train = s.train->head(a.train_limit);
  }
  if (s.test && a.test_limit > 0 && a.test_limit < s.test->size()) {
    s.test = s.test->head(a.test_limit);
  }
  return s;
}

void check_compatible(const Dataset& d, const NetworkConfig& config) {
  const Dims& dims = d.images.dims();
  if (d.classes != config.classes) {
    throw DataError(d.split + " set has " + std::to_string(d.classes) +
                    " classes but the network expects " + std::to_string(config.classes));
  }
  if (dims.c != config.channels || dims.h != config.height || dims.w != config.width) {
    throw DataError(d.split + " images are " + dims.str() + " but the network expects " +
                    config.input_dims(dims.n).str());
  }
}

// ------------------------------------------------------------------ network

struct NetArgs {
  std::string config;
  std::string head = "gap";
  double head_dropout = 0.0;

  void add_to(CLI::App& app) {
    app.add_option("--config", config, "Network config file")->required()->check(CLI::ExistingFile);
    app.add_option("--head", head, "Classifier head: gap, or fc to replace the final gap")
        ->check(CLI::IsMember({"gap", "fc"}))
        ->capture_default_str();
    app.add_option("--head-dropout", head_dropout, "Dropout ratio before the fc head")
        ->check(CLI::Range(0.0, 0.999))
        ->capture_default_str();
  }

  NetworkConfig build() const {
    NetworkConfig c = load_config(config);
    if (head == "fc") return with_fc_head(c, head_dropout);
    if (head_dropout > 0) throw ArgumentError("--head-dropout needs --head fc");
    return c;
  }
};

Augmentation parse_augment(const std::string& text) {
  Augmentation a;
  if (text.empty() || text == "none") return a;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    if (item == "flip") {
      a.flip_probability = 0.5;
    } else if (item.rfind("translate=", 0) == 0) {
      try {
        a.translate = std::stoul(item.substr(10));
      } catch (const std::exception&) {
        throw ArgumentError("bad --augment item '" + item + "'");
      }
    } else {
      throw ArgumentError("bad --augment item '" + item + "' (use translate=N, flip or none)");
    }
  }
  return a;
}

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

void add_manifest(CLI::App& cmd) {
  cmd.add_option("--dump-manifest", "Write the effective flags to this file and exit")
      ->configurable(false);
}

// Manifests are read by the root app (CLI11 only loads config files there), so
// the subcommand's flags are written under its own section.
// Empty strings are left out: they equal the defaults and would trip the
// file-exists checks on reload. SGD flags the config's `train` line can
// supply are kept only when given, so a reload still picks up the hints.
std::string manifest_text(CLI::App& cmd) {
  std::istringstream all(cmd.config_to_str(true, false));
  std::string text = "[" + cmd.get_name() + "]\n";
  for (std::string line; std::getline(all, line);) {
    if (line.ends_with("=\"\"") || line.ends_with("=''")) continue;
    const std::string key = line.substr(0, line.find('='));
    if (cmd.get_name() == "train" && cmd.count("--" + key) == 0 &&
        (key == "lr" || key == "momentum" || key == "weight-decay" || key == "batch")) {
      continue;
    }
    text += line + "\n";
  }
  return text;
}

bool dump_manifest(CLI::App& cmd) {
  auto* opt = cmd.get_option("--dump-manifest");
  if (opt->count() == 0) return false;
  std::ofstream out(opt->as<std::string>(), std::ios::trunc);
  out << manifest_text(cmd);
  if (!out) throw DataError("cannot write " + opt->as<std::string>());
  return true;
}

// -------------------------------------------------------------------- train

struct TrainArgs {
  NetArgs net;
  DataArgs data;
  std::string out = "run";
  std::uint64_t seed = 1;
  double init_std = kDefaultInitStd;
  double lr = 0.01;
  double momentum = 0.9;
  double weight_decay = 0.0;
  std::size_t batch = 128;
  std::size_t epochs = 200;
  std::string schedule = "plateau";
  std::vector<std::size_t> drop_epochs;
  std::size_t patience = 3;
  double min_delta = 1e-4;
  std::size_t max_drops = 2;
  double drop_factor = 10.0;
  std::string augment = "none";
  std::size_t val_tail = 0;
  std::size_t train_measure = 10000;
  std::size_t workers = 1;
  bool record_time = false;
  std::string resume;
  bool quiet = false;
};

int cmd_train(const TrainArgs& a, CLI::App& app) {
  NetworkConfig config = a.net.build();
  Splits splits = load_splits(a.data);
  if (!splits.train) throw ArgumentError("train needs --data or --train-file");

  Dataset train_set = std::move(*splits.train);
  std::optional<Dataset> val_set;
  if (a.val_tail > 0) {
    auto [head, tail] = split_validation(train_set, a.val_tail);
    train_set = std::move(head);
    val_set = std::move(tail);
  }
  check_compatible(train_set, config);
  if (splits.test) check_compatible(*splits.test, config);

  TrainOptions opt;
  SgdConfig& sgd = opt.sgd;
  // Flags win; otherwise the config's `train` line; otherwise the defaults.
  auto pick = [&](const char* flag, auto value, auto hint) {
    return (app.count(flag) == 0 && hint) ? *hint : value;
  };
  sgd.lr0 = pick("--lr", a.lr, config.hints.lr);
  sgd.momentum = pick("--momentum", a.momentum, config.hints.momentum);
  sgd.weight_decay = pick("--weight-decay", a.weight_decay, config.hints.weight_decay);
  sgd.batch = pick("--batch", a.batch, config.hints.batch);
  sgd.schedule = a.schedule == "fixed" ? ScheduleKind::fixed : ScheduleKind::plateau;
  sgd.drop_epochs = a.drop_epochs;
  sgd.plateau_patience = a.patience;
  sgd.min_delta = a.min_delta;
  sgd.max_drops = a.max_drops;
  sgd.drop_factor = a.drop_factor;
  sgd.max_epochs = a.epochs;
  sgd.validate();
  opt.seed = a.seed;
  opt.augmentation = parse_augment(a.augment);
  opt.workers = a.workers;
  opt.train_measure = a.train_measure;
  opt.out_dir = fs::path(a.out);
  opt.record_time = a.record_time;
  if (!a.quiet) {
    opt.on_epoch = [](const EpochMetrics& m) {
      std::printf("epoch %llu lr=%g train_loss=%.4f train_acc=%.4f",
                  static_cast<unsigned long long>(m.epoch), m.lr, m.train_loss, m.train_accuracy);
      if (m.val_accuracy) std::printf(" val_acc=%.4f", *m.val_accuracy);
      std::printf("\n");
      std::fflush(stdout);
    };
  }

  fs::create_directories(a.out);
  {
    std::ofstream manifest(fs::path(a.out) / "manifest.ini", std::ios::trunc);
    manifest << manifest_text(app);
  }

  Network net = Network::init(config, a.seed, a.init_std);
  TrainState state = TrainState::initial(sgd, a.seed);
  if (!a.resume.empty()) state = load_checkpoint(a.resume, net);

  state = train(net, train_set, val_set ? &*val_set : nullptr, opt, state);

  if (splits.test) {
    const auto result = evaluate(net, *splits.test, opt.eval_batch);
    std::printf("test_error=%s\n", fixed4(result.error_rate()).c_str());
  }
  return kExitOk;
}

// --------------------------------------------------------------------- eval

struct EvalArgs {
  NetArgs net;
  DataArgs data;
  std::string checkpoint;
  std::string split = "test";
};

const Dataset& pick_split(const Splits& s, const std::string& split) {
  const auto& d = split == "train" ? s.train : s.test;
  if (!d) throw ArgumentError("no " + split + " set given (use --data or --" + split + "-file)");
  return *d;
}

Network load_network(const NetArgs& args, const std::string& checkpoint) {
  Network net = Network::init(args.build(), 0);
  load_checkpoint(checkpoint, net);
  net.set_mode(Mode::eval);
  return net;
}

int cmd_eval(const EvalArgs& a) {
  Network net = load_network(a.net, a.checkpoint);
  const Splits splits = load_splits(a.data);
  const Dataset& d = pick_split(splits, a.split);
  check_compatible(d, net.config());
  const auto result = evaluate(net, d);
  std::printf("error_rate=%s\n", fixed4(result.error_rate()).c_str());
  return kExitOk;
}

// ---------------------------------------------------------------- gradcheck

struct GradcheckArgs {
  std::string config;
  std::uint64_t seed = 1;
  std::size_t spatial = 8;
  std::size_t channels = 4;
  std::size_t classes = 4;
  std::size_t batch = 2;
  double tolerance = 1e-6;
};

int cmd_gradcheck(const GradcheckArgs& a) {
  if constexpr (!kRealIsDouble) {
    std::fprintf(stderr,
                 "gradcheck needs 64-bit reals; run it with the ninkit64 executable\n");
    return kExitUsage;
  }
  const NetworkConfig small =
      downscale_config(load_config(a.config), a.spatial, a.channels, a.classes);
  const Network net = Network::init(small, a.seed);
  GradcheckOptions opt;
  opt.tolerance = a.tolerance;
  const auto report = gradcheck_network(net, a.seed, a.batch, opt);
  std::printf("%s", report.format().c_str());
  if (!report.passed()) {
    std::printf("gradcheck FAILED at %s (tolerance %g)\n", report.first_failure().c_str(),
                a.tolerance);
    return kExitNumeric;
  }
  std::printf("gradcheck passed (tolerance %g)\n", a.tolerance);
  return kExitOk;
}

// ---------------------------------------------------------------- visualize

struct VisualizeArgs {
  NetArgs net;
  DataArgs data;
  std::string checkpoint;
  std::string split = "test";
  std::vector<std::size_t> indices{0};
  double fraction = 0.10;
  std::string scope = "map";
  std::size_t cell = 64;
  std::string out = "panels";
};

int cmd_visualize(const VisualizeArgs& a) {
  Network net = load_network(a.net, a.checkpoint);
  const Splits splits = load_splits(a.data);
  const Dataset& d = pick_split(splits, a.split);
  check_compatible(d, net.config());
  for (std::size_t i : a.indices) {
    if (i >= d.size()) {
      throw ArgumentError("index " + std::to_string(i) + " out of range; valid indices are 0.." +
                          std::to_string(d.size() - 1));
    }
  }
  PanelOptions opt;
  opt.fraction = a.fraction;
  opt.scope = a.scope == "panel" ? ThresholdScope::panel : ThresholdScope::map;
  opt.cell = a.cell;
  fs::create_directories(a.out);
  for (std::size_t i : a.indices) {
    const auto dump = extract_maps(net, d.images.slice_batch(i, 1), d.labels[i]);
    const fs::path path = fs::path(a.out) / ("panel_" + std::to_string(i) + ".ppm");
    write_ppm(render_panel(dump, opt), path);
    std::printf("%s truth=%u predicted=%u\n", path.string().c_str(), dump.ground_truth,
                dump.predicted);
  }
  return kExitOk;
}

// --------------------------------------------------------------- preprocess

struct PreprocessArgs {
  DataArgs data;
  std::vector<std::string> steps;
  double gcn_scale = 55.0;
  double zca_epsilon = 1e-5;
  std::size_t lcn_kernel = 7;
  std::string out = "preprocessed";
};

int cmd_preprocess(const PreprocessArgs& a) {
  Splits s = load_splits(a.data);
  if (!s.train) throw ArgumentError("preprocess needs --data or --train-file");
  fs::create_directories(a.out);
  for (const auto& step : a.steps) {
    if (step == "gcn") {
      GcnOptions g;
      g.scale = a.gcn_scale;
      gcn(s.train->images, g);
      if (s.test) gcn(s.test->images, g);
    } else if (step == "zca") {
      // Fitted on the training set only; the test set reuses the transform.
      const ZcaModel zca = ZcaModel::fit(s.train->images, a.zca_epsilon);
      zca.apply(s.train->images);
      if (s.test) zca.apply(s.test->images);
      zca.save(fs::path(a.out) / "zca.bin");
    } else {
      LcnOptions l;
      l.kernel = a.lcn_kernel;
      lcn(s.train->images, l);
      if (s.test) lcn(s.test->images, l);
    }
    std::printf("applied %s\n", step.c_str());
  }
  save_dataset(*s.train, fs::path(a.out) / "train.nds");
  if (s.test) save_dataset(*s.test, fs::path(a.out) / "test.nds");
  std::printf("wrote %s\n", a.out.c_str());
  return kExitOk;
}

// ------------------------------------------------------------------- curves

struct CurvesArgs {
  std::vector<std::string> metrics;
  std::string out = "curves.csv";
};

int cmd_curves(const CurvesArgs& a) {
  std::vector<fs::path> files(a.metrics.begin(), a.metrics.end());
  const std::size_t rows = export_curves(files, a.out);
  std::printf("wrote %zu rows to %s\n", rows, a.out.c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{kRealIsDouble ? "ninkit64: Network-In-Network engine (64-bit reals)"
                             : "ninkit: Network-In-Network engine"};
  app.require_subcommand(1);
  app.set_config("--manifest", "", "Read flags from an INI manifest written by --dump-manifest");
  app.fallthrough();

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train a network");
  tr.net.add_to(*train_cmd);
  tr.data.add_to(*train_cmd);
  train_cmd->add_option("--out", tr.out, "Output directory")->capture_default_str();
  train_cmd->add_option("--seed", tr.seed, "Random seed")->capture_default_str();
  train_cmd->add_option("--init-std", tr.init_std, "Default weight init std")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train_cmd->add_option("--lr", tr.lr, "Initial learning rate")->capture_default_str();
  train_cmd->add_option("--momentum", tr.momentum, "Momentum")->capture_default_str();
  train_cmd->add_option("--weight-decay", tr.weight_decay, "L2 weight decay")
      ->capture_default_str();
  train_cmd->add_option("--batch", tr.batch, "Mini-batch size")->capture_default_str();
  train_cmd->add_option("--epochs", tr.epochs, "Maximum epochs")->capture_default_str();
  train_cmd->add_option("--schedule", tr.schedule, "Learning-rate schedule")
      ->check(CLI::IsMember({"plateau", "fixed"}))
      ->capture_default_str();
  train_cmd->add_option("--drop-epochs", tr.drop_epochs, "Epochs after which a fixed schedule drops the rate")
      ->delimiter(',');
  train_cmd->add_option("--patience", tr.patience, "Plateau epochs before a drop")
      ->capture_default_str();
  train_cmd->add_option("--min-delta", tr.min_delta, "Smallest accuracy gain that counts")
      ->capture_default_str();
  train_cmd->add_option("--max-drops", tr.max_drops, "Rate drops before stopping")
      ->capture_default_str();
  train_cmd->add_option("--drop-factor", tr.drop_factor, "Divisor applied at each drop")
      ->capture_default_str();
  train_cmd->add_option("--augment", tr.augment, "translate=N and/or flip, comma separated")
      ->capture_default_str();
  train_cmd->add_option("--val-tail", tr.val_tail, "Hold out the last N training images")
      ->capture_default_str();
  train_cmd->add_option("--train-measure", tr.train_measure,
                        "Training images scored each epoch for the schedule (0 = all)")
      ->capture_default_str();
  train_cmd->add_option("--workers", tr.workers, "Threads per batch")->capture_default_str();
  train_cmd->add_flag("--record-time", tr.record_time, "Store wall-clock seconds in metrics.csv");
  train_cmd->add_option("--resume", tr.resume, "Continue from a checkpoint")
      ->check(CLI::ExistingFile);
  train_cmd->add_flag("--quiet", tr.quiet, "No per-epoch lines");
  add_manifest(*train_cmd);

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Report the error rate of a checkpoint");
  ev.net.add_to(*eval_cmd);
  ev.data.add_to(*eval_cmd);
  eval_cmd->add_option("--checkpoint", ev.checkpoint, "Checkpoint file")
      ->required()
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--split", ev.split, "Which split to score")
      ->check(CLI::IsMember({"train", "test"}))
      ->capture_default_str();
  add_manifest(*eval_cmd);

  GradcheckArgs gc;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference check of every gradient");
  grad_cmd->add_option("--config", gc.config, "Network config file")
      ->required()
      ->check(CLI::ExistingFile);
  grad_cmd->add_option("--seed", gc.seed, "Random seed")->capture_default_str();
  grad_cmd->add_option("--spatial", gc.spatial, "Input side of the scaled-down network")
      ->capture_default_str();
  grad_cmd->add_option("--channels", gc.channels, "Channel cap for hidden layers")
      ->capture_default_str();
  grad_cmd->add_option("--classes", gc.classes, "Class cap")->capture_default_str();
  grad_cmd->add_option("--batch", gc.batch, "Images in the probe batch")->capture_default_str();
  grad_cmd->add_option("--tolerance", gc.tolerance, "Largest accepted relative error")
      ->capture_default_str();
  add_manifest(*grad_cmd);

  VisualizeArgs vz;
  auto* viz_cmd = app.add_subcommand("visualize", "Render class feature maps as PPM panels");
  vz.net.add_to(*viz_cmd);
  vz.data.add_to(*viz_cmd);
  viz_cmd->add_option("--checkpoint", vz.checkpoint, "Checkpoint file")
      ->required()
      ->check(CLI::ExistingFile);
  viz_cmd->add_option("--split", vz.split, "Which split the indices refer to")
      ->check(CLI::IsMember({"train", "test"}))
      ->capture_default_str();
  viz_cmd->add_option("--indices", vz.indices, "Image indices")->delimiter(',');
  viz_cmd->add_option("--fraction", vz.fraction, "Fraction of activations kept")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  viz_cmd->add_option("--threshold-scope", vz.scope, "Threshold per map or over the panel")
      ->check(CLI::IsMember({"map", "panel"}))
      ->capture_default_str();
  viz_cmd->add_option("--cell", vz.cell, "Pixels per tile side")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  viz_cmd->add_option("--out", vz.out, "Output directory")->capture_default_str();
  add_manifest(*viz_cmd);

  PreprocessArgs pp;
  auto* pre_cmd = app.add_subcommand("preprocess", "Apply GCN, ZCA and LCN offline");
  pp.data.add_to(*pre_cmd);
  pre_cmd->add_option("--steps", pp.steps, "Steps in order: gcn, zca, lcn")
      ->delimiter(',')
      ->required()
      ->check(CLI::IsMember({"gcn", "zca", "lcn"}));
  pre_cmd->add_option("--gcn-scale", pp.gcn_scale, "GCN output scale")->capture_default_str();
  pre_cmd->add_option("--zca-epsilon", pp.zca_epsilon, "ZCA eigenvalue regularizer")
      ->capture_default_str();
  pre_cmd->add_option("--lcn-kernel", pp.lcn_kernel, "LCN Gaussian window (odd)")
      ->capture_default_str();
  pre_cmd->add_option("--out", pp.out, "Output directory")->capture_default_str();
  add_manifest(*pre_cmd);

  CurvesArgs cv;
  auto* curves_cmd = app.add_subcommand("curves", "Merge metrics.csv files into one error table");
  curves_cmd->add_option("metrics", cv.metrics, "metrics.csv files")->required();
  curves_cmd->add_option("--out", cv.out, "Output CSV")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    for (CLI::App* cmd : {train_cmd, eval_cmd, grad_cmd, viz_cmd, pre_cmd}) {
      if (cmd->parsed() && dump_manifest(*cmd)) return kExitOk;
    }
    if (train_cmd->parsed()) return cmd_train(tr, *train_cmd);
    if (eval_cmd->parsed()) return cmd_eval(ev);
    if (grad_cmd->parsed()) return cmd_gradcheck(gc);
    if (viz_cmd->parsed()) return cmd_visualize(vz);
    if (pre_cmd->parsed()) return cmd_preprocess(pp);
    if (curves_cmd->parsed()) return cmd_curves(cv);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const ArgumentError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return kExitUsage;
}
