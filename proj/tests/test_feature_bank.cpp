#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "mgal/errors.hpp"
#include "mgal/feature_bank.hpp"
#include "mgal/rng.hpp"
#include "oracles.hpp"

using namespace mgal;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("mgal_fb_" + name);
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

}  // namespace

TEST(GridFeatures, EmptySketchIsZero) {
  const Raster r = rasterize({}, 256, 256);
  const FeatureVector f = extract_grid_features(r, {}, GridSpec{});
  ASSERT_EQ(f.v.size(), 2048u);
  for (double x : f.v) EXPECT_EQ(x, 0.0);
}

TEST(GridFeatures, HorizontalSegmentInOneCell) {
  const std::vector<Stroke> strokes{{{0.01, 0.01}, {0.04, 0.01}}};
  const FeatureVector f = featurize(strokes, FeaturizerConfig{});
  std::size_t nonzero = 0;
  for (double x : f.v) nonzero += x != 0.0;
  EXPECT_EQ(nonzero, 1u);
  EXPECT_DOUBLE_EQ(f.v[0], 0.03 * 255.0);

  // Same segment moved to cell (row 2, col 5).
  const std::vector<Stroke> moved{{{5.1 / 16, 2.5 / 16}, {5.6 / 16, 2.5 / 16}}};
  const FeatureVector g = featurize(moved, FeaturizerConfig{});
  EXPECT_GT(g.v[(2 * 16 + 5) * 8 + 0], 0.0);
}

TEST(GridFeatures, OrientationBins) {
  const GridSpec spec{1, 4};
  const Raster r = rasterize({}, 101, 101);
  // 0, 45, 90, 135 degrees in pixel space -> bins 0..3.
  const std::vector<Segment> segs{{{0.2, 0.5}, {0.8, 0.5}},
                                  {{0.2, 0.2}, {0.8, 0.8}},
                                  {{0.5, 0.2}, {0.5, 0.8}},
                                  {{0.8, 0.2}, {0.2, 0.8}}};
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const auto f = extract_grid_features(r, std::span(&segs[i], 1), spec);
    for (std::size_t b = 0; b < 4; ++b) EXPECT_EQ(f.v[b] > 0.0, b == i) << i << "," << b;
  }
  // Direction does not matter.
  const std::vector<Segment> rev{{{0.8, 0.5}, {0.2, 0.5}}};
  EXPECT_GT(extract_grid_features(r, rev, spec).v[0], 0.0);
}

TEST(GridFeatures, ZeroLengthSegmentsContributeNothing) {
  const Raster r = rasterize({}, 64, 64);
  const std::vector<Segment> segs{{{0.3, 0.3}, {0.3, 0.3}}};
  const auto f = extract_grid_features(r, segs, GridSpec{});
  for (double x : f.v) EXPECT_EQ(x, 0.0);
}

TEST(GridFeatures, MassEqualsTotalSegmentLength) {
  Rng rng(2024);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Segment> segs;
    long double total = 0.0L;
    for (int i = 0; i < 50; ++i) {
      Segment s{{rng.uniform(), rng.uniform()}, {rng.uniform(), rng.uniform()}};
      total += std::hypot((s.b.x - s.a.x) * 255.0, (s.b.y - s.a.y) * 255.0);
      segs.push_back(s);
    }
    const auto f = extract_grid_features(rasterize({}, 256, 256), segs, GridSpec{});
    long double l1 = 0.0L;
    for (double x : f.v) l1 += std::fabs(x);
    EXPECT_NEAR(static_cast<double>(l1), static_cast<double>(total), 1e-9 * static_cast<double>(total));
  }
}

TEST(GridFeatures, Deterministic) {
  const std::vector<Stroke> strokes{{{0.1, 0.2}, {0.4, 0.7}, {0.9, 0.1}}, {{0.3, 0.3}, {0.35, 0.9}}};
  EXPECT_EQ(featurize(strokes, {}), featurize(strokes, {}));
}

TEST(FeatureFile, RoundTripIsExact) {
  Rng rng(1);
  std::vector<FeatureVector> fs;
  for (int i = 0; i < 3; ++i) {
    FeatureVector f{"f" + std::to_string(i), {}};
    for (int c = 0; c < 7; ++c) f.v.push_back(rng.normal() * std::pow(10.0, c - 3));
    fs.push_back(f);
  }
  fs[0].v[0] = 0.1;
  fs[0].v[1] = 1e-300;
  fs[0].v[2] = -0.0;
  fs[0].v[3] = 123456789.123456789;
  const auto p = temp_file("rt.ndjson");
  save_features(fs, p);
  const auto back = load_features(p);
  ASSERT_EQ(back.size(), fs.size());
  for (std::size_t i = 0; i < fs.size(); ++i) {
    EXPECT_EQ(back[i].id, fs[i].id);
    for (std::size_t c = 0; c < fs[i].v.size(); ++c) {
      EXPECT_EQ(std::bit_cast<std::uint64_t>(back[i].v[c]), std::bit_cast<std::uint64_t>(fs[i].v[c]));
    }
  }
  std::filesystem::remove(p);
}

TEST(FeatureFile, DimensionMismatchNamesBothRecords) {
  const auto p = temp_file("mixed.ndjson");
  std::string text = R"({"id": "wide", "v": [)" ;
  for (int i = 0; i < 2048; ++i) text += (i ? ",0" : "0");
  text += "]}\n";
  text += R"({"id": "narrow", "v": [)";
  for (int i = 0; i < 64; ++i) text += (i ? ",1" : "1");
  text += "]}\n";
  write_text(p, text);
  try {
    load_features(p);
    FAIL();
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("wide"), std::string::npos);
    EXPECT_NE(msg.find("narrow"), std::string::npos);
  }
  std::filesystem::remove(p);
}

TEST(FeatureFile, NonFiniteValuesRejected) {
  const auto p = temp_file("nan.ndjson");
  write_text(p, R"({"id": "x", "v": [1.0, "NaN", 2.0]})" "\n");
  EXPECT_THROW(load_features(p), ValidationError);
  write_text(p, R"({"id": "x", "v": [1.0, "Infinity"]})" "\n");
  EXPECT_THROW(load_features(p), ValidationError);
  write_text(p, R"({"id": "x", "v": [1.0, "abc"]})" "\n");
  EXPECT_THROW(load_features(p), ParseError);
  const std::vector<FeatureVector> bad{{"y", {1.0, std::nan("")}}};
  EXPECT_THROW(save_features(bad, p), ValidationError);
  std::filesystem::remove(p);
}

TEST(TrajectoryFile, RoundTrip) {
  const auto ds = gen_synthetic(4, 5, 6, 2, 0.1, 3);
  const auto p = temp_file("traj.ndjson");
  save_trajectories(ds.trajectories, p);
  EXPECT_EQ(load_trajectories(p), ds.trajectories);
  std::filesystem::remove(p);
}

TEST(TrajectoryFile, MissingStepRejected) {
  const auto p = temp_file("gap.ndjson");
  write_text(p, R"({"id":"e/0","episode":"e","photo_id":"p","step":0,"v":[1,2]})" "\n"
                R"({"id":"e/2","episode":"e","photo_id":"p","step":2,"v":[1,2]})" "\n");
  EXPECT_THROW(load_trajectories(p), ValidationError);
  std::filesystem::remove(p);
}

TEST(Synthetic, ZeroNoiseFinalStepNearestOwnPhoto) {
  const auto ds = gen_synthetic(2, 8, 2, 1, 0.0, 5);
  for (std::size_t i = 0; i < 2; ++i) {
    const auto& last = ds.trajectories[i].steps.back();
    EXPECT_LT(oracle::dist(last, ds.photos[i].v), oracle::dist(last, ds.photos[1 - i].v));
  }
}

TEST(Synthetic, DeterministicPerSeed) {
  const auto a = gen_synthetic(10, 6, 5, 2, 0.1, 42);
  const auto b = gen_synthetic(10, 6, 5, 2, 0.1, 42);
  EXPECT_EQ(a.photos, b.photos);
  EXPECT_EQ(a.trajectories, b.trajectories);
  const auto c = gen_synthetic(10, 6, 5, 2, 0.1, 43);
  EXPECT_NE(a.photos, c.photos);
}

TEST(Synthetic, MeanDistanceToOwnPhotoStrictlyDecreasing) {
  const auto ds = gen_synthetic(200, 32, 20, 4, 0.1, 7);
  ASSERT_EQ(ds.trajectories.size(), 200u);
  std::vector<long double> mean(20, 0.0L);
  for (std::size_t i = 0; i < 200; ++i) {
    ASSERT_EQ(ds.trajectories[i].photo_id, ds.photos[i].id);
    ASSERT_EQ(ds.trajectories[i].steps.size(), 20u);
    for (std::size_t t = 0; t < 20; ++t) mean[t] += oracle::dist(ds.trajectories[i].steps[t], ds.photos[i].v);
  }
  for (std::size_t t = 0; t + 1 < 20; ++t) EXPECT_GT(mean[t], mean[t + 1]) << "t=" << t;
}

TEST(Synthetic, LastStepIsClosestStep) {
  const auto ds = gen_synthetic(50, 16, 12, 3, 0.3, 9);
  for (std::size_t i = 0; i < ds.photos.size(); ++i) {
    const auto& steps = ds.trajectories[i].steps;
    const double last = oracle::dist(steps.back(), ds.photos[i].v);
    for (std::size_t t = 0; t + 1 < steps.size(); ++t) {
      EXPECT_LT(last, oracle::dist(steps[t], ds.photos[i].v));
    }
  }
}

TEST(Synthetic, ZeroNoiseConvergesMonotonically) {
  const auto ds = gen_synthetic(20, 16, 10, 3, 0.0, 1);
  for (std::size_t i = 0; i < 20; ++i) {
    const auto& st = ds.trajectories[i].steps;
    for (std::size_t t = 0; t + 1 < st.size(); ++t) {
      EXPECT_GT(oracle::dist(st[t], ds.photos[i].v), oracle::dist(st[t + 1], ds.photos[i].v));
    }
    EXPECT_EQ(st.back(), ds.photos[i].v);
  }
}

TEST(Synthetic, PreconditionsEnforced) {
  EXPECT_THROW(gen_synthetic(1, 4, 4, 1, 0.1, 0), ValidationError);
  EXPECT_THROW(gen_synthetic(4, 1, 4, 1, 0.1, 0), ValidationError);
  EXPECT_THROW(gen_synthetic(4, 4, 4, 5, 0.1, 0), ValidationError);
  EXPECT_THROW(gen_synthetic(4, 4, 4, 0, 0.1, 0), ValidationError);
}
