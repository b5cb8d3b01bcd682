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

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "ninkit/viz.hpp"

using namespace ninkit;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "ninkit_viz_tests";
  fs::create_directories(dir);
  return dir / name;
}

constexpr const char* kNet = R"(
input channels=3 height=8 width=8 classes=4
conv kernel=3 output=6 pad=1
relu
cccp output=4
relu
gap
)";

}  // namespace

TEST(Threshold, KeepCountIsCeilingOfFraction) {
  for (std::size_t cells = 1; cells <= 300; ++cells) {
    std::size_t expected = (cells + 9) / 10;  // integer ceil(cells / 10)
    ASSERT_EQ(threshold_keep_count(cells, 0.10), expected) << cells;
  }
  EXPECT_EQ(threshold_keep_count(64, 0.25), 16u);
  EXPECT_EQ(threshold_keep_count(7, 1.0), 7u);
  EXPECT_THROW(threshold_keep_count(10, 0.0), ArgumentError);
  EXPECT_THROW(threshold_keep_count(10, 1.5), ArgumentError);
}

TEST(Threshold, TopIndicesPreferEarlierOnTies) {
  const std::vector<Real> v{1, 5, 3, 5, 2};
  EXPECT_EQ(top_indices(v, 0.4), (std::vector<std::size_t>{1, 3}));
  EXPECT_EQ(top_indices(v, 0.2), (std::vector<std::size_t>{1}));
  const auto kept = threshold_top(v, 0.6);
  EXPECT_EQ(kept, (std::vector<Real>{0, 5, 3, 5, 0}));
}

TEST(Threshold, SurvivorsAreTheLargest) {
  Rng rng(4);
  const Tensor4 t = gaussian(rng, {1, 1, 8, 8}, Real{1});
  const auto kept = threshold_top(t.data(), 0.10);
  Real smallest_kept = 1e9, largest_dropped = -1e9;
  std::size_t survivors = 0;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    if (kept[i] != 0) {
      ++survivors;
      smallest_kept = std::min(smallest_kept, t[i]);
    } else {
      largest_dropped = std::max(largest_dropped, t[i]);
    }
  }
  EXPECT_EQ(survivors, 7u);
  EXPECT_GT(smallest_kept, largest_dropped);
}

TEST(Extract, GapOfMapsEqualsLogits) {
  const Network net = Network::init(parse_config(kNet), 3, 0.3);
  Rng rng(1);
  const Tensor4 image = gaussian(rng, {1, 3, 8, 8}, Real{1});
  const auto dump = extract_maps(net, image, 2);
  ASSERT_EQ(dump.maps.dims(), (Dims{1, 4, 8, 8}));
  ASSERT_EQ(dump.logits.size(), 4u);
  for (std::size_t k = 0; k < 4; ++k) {
    double s = 0;
    for (std::size_t i = 0; i < 64; ++i) s += dump.maps[k * 64 + i];
    EXPECT_NEAR(s / 64, dump.logits[k], 1e-12);
  }
  EXPECT_EQ(dump.ground_truth, 2u);
  EXPECT_LT(dump.predicted, 4u);
}

TEST(Extract, RequiresGapNetwork) {
  const Network net = Network::init(with_fc_head(parse_config(kNet), 0.0), 3);
  Rng rng(1);
  EXPECT_THROW(extract_maps(net, gaussian(rng, {1, 3, 8, 8}, Real{1}), 0), ShapeError);
}

TEST(Panel, LayoutAndGroundTruthBorder) {
  const Network net = Network::init(parse_config(kNet), 3, 0.3);
  Rng rng(2);
  const auto dump = extract_maps(net, gaussian(rng, {1, 3, 8, 8}, Real{1}), 1);
  PanelOptions opt;
  opt.cell = 16;
  opt.gutter = 2;
  const Raster r = render_panel(dump, opt);
  EXPECT_EQ(r.width, 5u * 18);
  EXPECT_EQ(r.height, 18u);
  EXPECT_EQ(r.rgb.size(), r.width * r.height * 3);
  // Top-left pixel of tile 2 (class 1) is green border.
  const std::size_t o = (0 * r.width + 2 * 18) * 3;
  EXPECT_EQ(r.rgb[o], 0);
  EXPECT_EQ(r.rgb[o + 1], 255);
  EXPECT_EQ(r.rgb[o + 2], 0);
}

TEST(Panel, PpmHeader) {
  Raster r{3, 2, std::vector<std::uint8_t>(18, 7)};
  write_ppm(r, scratch("p.ppm"));
  std::ifstream in(scratch("p.ppm"), std::ios::binary);
  std::string magic;
  std::size_t w, h, maxv;
  in >> magic >> w >> h >> maxv;
  EXPECT_EQ(magic, "P6");
  EXPECT_EQ(w, 3u);
  EXPECT_EQ(h, 2u);
  EXPECT_EQ(maxv, 255u);
  EXPECT_EQ(fs::file_size(scratch("p.ppm")), std::string("P6\n3 2\n255\n").size() + 18);
}

TEST(Resize, BilinearPreservesConstantsAndCorners) {
  const std::vector<double> flat(4, 0.3);
  for (double v : resize_bilinear(flat, 2, 2, 5, 7)) EXPECT_NEAR(v, 0.3, 1e-15);
  const std::vector<double> ramp{0, 1, 2, 3};
  const auto up = resize_bilinear(ramp, 1, 4, 1, 8);
  EXPECT_DOUBLE_EQ(up.front(), 0);
  EXPECT_DOUBLE_EQ(up.back(), 3);
  for (std::size_t i = 1; i < up.size(); ++i) EXPECT_GE(up[i], up[i - 1]);
}

TEST(Curves, LongFormatExport) {
  fs::create_directories(scratch("gap"));
  fs::create_directories(scratch("fc"));
  std::ofstream(scratch("gap") / "metrics.csv")
      << "epoch,lr,train_loss,train_acc,val_loss,val_acc,seconds\n1,0.1,1,0.5,1,0.4,0\n"
         "2,0.1,1,0.75,1,0.5,0\n";
  std::ofstream(scratch("fc") / "metrics.csv")
      << "epoch,lr,train_loss,train_acc,val_loss,val_acc,seconds\n1,0.1,1,0.25,,,0\n";
  const std::vector<fs::path> files{scratch("gap") / "metrics.csv", scratch("fc") / "metrics.csv"};
  EXPECT_EQ(export_curves(files, scratch("curves.csv")), 5u);
  std::ifstream in(scratch("curves.csv"));
  std::string all((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  EXPECT_NE(all.find("gap,2,val,0.500000"), std::string::npos) << all;
  EXPECT_NE(all.find("fc,1,train,0.750000"), std::string::npos) << all;
}

TEST(Curves, MalformedRowNamesLine) {
  fs::create_directories(scratch("bad"));
  std::ofstream(scratch("bad") / "metrics.csv")
      << "epoch,lr,train_loss,train_acc,val_loss,val_acc,seconds\n1,0.1,1,oops,,,0\n";
  const std::vector<fs::path> files{scratch("bad") / "metrics.csv"};
  try {
    export_curves(files, scratch("bad.csv"));
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("metrics.csv:2"), std::string::npos) << e.what();
  }
}
