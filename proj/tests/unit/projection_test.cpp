#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "oracles.hpp"
#include "srcattr/checkpoint.hpp"
#include "srcattr/error.hpp"
#include "srcattr/projection.hpp"
#include "temp_dir.hpp"

using namespace srcattr;
using namespace srcattr::contrastive;

namespace {

ProjectionParams random_params(std::size_t in, std::vector<std::size_t> hidden, std::size_t out,
                               std::uint64_t seed) {
  auto p = ProjectionParams::xavier(in, hidden, out, seed);
  std::mt19937_64 rng(seed + 100);
  std::normal_distribution<double> g(0.0, 0.1);
  for (auto& l : p.layers) {
    for (double& b : l.bias) b = g(rng);
  }
  return p;
}

std::vector<oracle::Layer> as_oracle(const ProjectionParams& p) {
  std::vector<oracle::Layer> out;
  for (const auto& l : p.layers) out.push_back({l.in, l.out, l.weight, l.bias});
  return out;
}

}  // namespace

TEST(Projection, XavierShapesAndBounds) {
  const std::vector<std::size_t> hidden = {128};
  const auto p = ProjectionParams::xavier(256, hidden, 64, 3);
  ASSERT_EQ(p.layers.size(), 2u);
  EXPECT_EQ(p.input_dim(), 256u);
  EXPECT_EQ(p.output_dim(), 64u);
  EXPECT_EQ(p.parameter_count(), 256u * 128 + 128 + 128 * 64 + 64);
  const double a0 = std::sqrt(6.0 / (256 + 128));
  for (double w : p.layers[0].weight) {
    EXPECT_LE(std::abs(w), a0);
    EXPECT_EQ(w, static_cast<double>(static_cast<float>(w)));
  }
  for (double b : p.layers[1].bias) EXPECT_EQ(b, 0.0);
  EXPECT_EQ(p, ProjectionParams::xavier(256, hidden, 64, 3));
  EXPECT_NE(p, ProjectionParams::xavier(256, hidden, 64, 4));
}

TEST(Projection, ZeroParamsGiveFiniteOutput) {
  const std::vector<std::size_t> hidden = {4};
  const auto p = ProjectionParams::xavier(6, hidden, 3, 1).zeros_like();
  const auto z = project(std::vector<double>{1, 2, 3, 4, 5, 6}, p);
  ASSERT_EQ(z.size(), 3u);
  for (double v : z) EXPECT_EQ(v, 0.0);
}

TEST(Projection, IdentityLayerNormalizes) {
  ProjectionParams p;
  DenseLayer l;
  l.in = l.out = 5;
  l.weight.assign(25, 0.0);
  for (std::size_t i = 0; i < 5; ++i) l.weight[i * 5 + i] = 1.0;
  l.bias.assign(5, 0.0);
  p.layers.push_back(l);
  const std::vector<double> v = {3, -4, 0, 12, 0};
  const auto z = project(v, p);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(z[i], v[i] / 13.0, 1e-12);
}

TEST(Projection, UnitNormAndMatchesOracle) {
  const auto p = random_params(16, {12}, 8, 5);
  const auto layers = as_oracle(p);
  std::mt19937_64 rng(6);
  for (int i = 0; i < 100; ++i) {
    const auto v = oracle::random_unit(16, rng);
    const auto z = project(v, p);
    EXPECT_NEAR(std::sqrt(oracle::dot(z, z)), 1.0, 1e-6);
    const auto expected = oracle::mlp(layers, v);
    for (std::size_t k = 0; k < z.size(); ++k) EXPECT_NEAR(z[k], expected[k], 1e-14);
  }
}

TEST(Projection, ShapeMismatch) {
  const auto p = random_params(4, {3}, 2, 1);
  try {
    project(std::vector<double>(5, 1.0), p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ShapeMismatch);
  }
  auto broken = p;
  broken.layers[1].in = 4;
  EXPECT_THROW(broken.validate(), Error);
  broken = p;
  broken.layers[0].bias.pop_back();
  EXPECT_THROW(broken.validate(), Error);
  broken = p;
  broken.layers[0].weight[0] = std::nan("");
  EXPECT_THROW(broken.validate(), Error);
}

TEST(Checkpoint, RoundTripIsBitIdentical) {
  testutil::TempDir dir;
  auto p = random_params(10, {7, 5}, 3, 8);
  p.round_to_float();
  checkpoint_save(p, dir / "m.ckpt", R"({"seed":8})");
  const auto ck = checkpoint_load(dir / "m.ckpt");
  EXPECT_EQ(ck.params, p);
  EXPECT_EQ(ck.meta, R"({"seed":8})");
  checkpoint_save(ck.params, dir / "m2.ckpt", ck.meta);
  EXPECT_EQ(testutil::slurp(dir / "m.ckpt"), testutil::slurp(dir / "m2.ckpt"));
}

TEST(Checkpoint, TruncatedOrPaddedIsCorrupt) {
  testutil::TempDir dir;
  const auto p = ProjectionParams::xavier(6, std::vector<std::size_t>{4}, 2, 1);
  checkpoint_save(p, dir / "m.ckpt");
  const auto bytes = testutil::slurp(dir / "m.ckpt");
  for (const auto& variant : {bytes.substr(0, bytes.size() - 3), bytes.substr(0, 40), bytes + "x"}) {
    testutil::spit(dir / "bad.ckpt", variant);
    try {
      checkpoint_load(dir / "bad.ckpt");
      FAIL() << variant.size();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::CorruptCheckpoint);
    }
  }
}

TEST(Checkpoint, VersionMismatchNamesVersion) {
  testutil::TempDir dir;
  const auto p = ProjectionParams::xavier(6, std::vector<std::size_t>{4}, 2, 1);
  checkpoint_save(p, dir / "m.ckpt");
  auto bytes = testutil::slurp(dir / "m.ckpt");
  bytes.replace(bytes.find("version=1"), 9, "version=7");
  testutil::spit(dir / "v.ckpt", bytes);
  try {
    checkpoint_load(dir / "v.ckpt");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::CorruptCheckpoint);
    EXPECT_NE(std::string(e.what()).find("version 7"), std::string::npos) << e.what();
  }
}

TEST(Checkpoint, NotACheckpoint) {
  testutil::TempDir dir;
  testutil::spit(dir / "x.ckpt", "hello\n");
  EXPECT_THROW(checkpoint_load(dir / "x.ckpt"), Error);
  EXPECT_THROW(checkpoint_load(dir / "absent.ckpt"), Error);
}
