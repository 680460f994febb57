#include "splatview/splat_ply.h"

#include <cmath>

#include <gtest/gtest.h>

#include "splatview/error.h"
#include "test_util.h"

namespace splatview {
namespace {

using testing::PlyLayout;
using testing::RawSplat;
using testing::TempDir;
using testing::WriteSplatPly;

RawSplat MakeRaw(int rest_count, float seed) {
  RawSplat s;
  s.position[0] = seed;
  s.position[1] = -2.0f * seed;
  s.position[2] = 3.0f;
  s.opacity = 0.0f;
  s.scale[0] = 0.0f;
  s.scale[1] = std::log(2.0f);
  s.scale[2] = -1.0f;
  s.rotation[0] = 2.0f;
  s.dc[0] = 0.1f;
  s.dc[1] = 0.2f;
  s.dc[2] = 0.3f;
  for (int i = 0; i < rest_count; ++i) s.rest.push_back(0.01f * (i + 1));
  return s;
}

TEST(LoadSplatPly, DegreeZeroSingleVertex) {
  TempDir dir;
  WriteSplatPly(dir / "a.ply", {MakeRaw(0, 1.0f)}, PlyLayout{});
  const SplatCloud cloud = LoadSplatPly(dir / "a.ply");
  ASSERT_EQ(cloud.gaussians.size(), 1u);
  EXPECT_EQ(cloud.sh_degree, 0);
  const Gaussian& g = cloud.gaussians[0];
  EXPECT_EQ(g.position, Vec3(1.0, -2.0, 3.0));
  EXPECT_DOUBLE_EQ(g.opacity, 0.5);
  EXPECT_NEAR(g.scale[0], 1.0, 1e-12);
  EXPECT_NEAR(g.scale[1], 2.0, 1e-6);
  EXPECT_NEAR(g.scale[2], std::exp(-1.0), 1e-7);
  EXPECT_EQ(g.rotation.coeffs(), Quat::Identity().coeffs());
  EXPECT_EQ(g.NumCoeffs(), 1);
  EXPECT_DOUBLE_EQ(g.sh[1][0], static_cast<double>(0.2f));
}

TEST(LoadSplatPly, InfersDegreeFromRestCount) {
  // 3 * ((D + 1)^2 - 1) for D = 1, 2, 3.
  for (const auto& [rest, degree] : {std::pair{9, 1}, std::pair{24, 2}, std::pair{45, 3}}) {
    TempDir dir;
    PlyLayout layout;
    layout.rest_count = rest;
    WriteSplatPly(dir / "a.ply", {MakeRaw(rest, 0.0f), MakeRaw(rest, 1.0f)}, layout);
    const SplatCloud cloud = LoadSplatPly(dir / "a.ply");
    EXPECT_EQ(cloud.sh_degree, degree);
    EXPECT_EQ(cloud.gaussians[1].NumCoeffs(), (degree + 1) * (degree + 1));
  }
}

TEST(LoadSplatPly, RestCoefficientsAreChannelMajor) {
  TempDir dir;
  PlyLayout layout;
  layout.rest_count = 45;
  WriteSplatPly(dir / "a.ply", {MakeRaw(45, 0.0f)}, layout);
  const Gaussian g = LoadSplatPly(dir / "a.ply").gaussians[0];
  // Green (channel 1) coefficient 1 is f_rest_15, the 16th stored value.
  EXPECT_DOUBLE_EQ(g.sh[1][1], static_cast<double>(0.01f * 16));
  EXPECT_DOUBLE_EQ(g.sh[2][15], static_cast<double>(0.01f * 45));
  EXPECT_DOUBLE_EQ(g.sh[0][0], static_cast<double>(0.1f));
}

TEST(LoadSplatPly, RejectsUnmatchedRestCount) {
  TempDir dir;
  PlyLayout layout;
  layout.rest_count = 7;
  WriteSplatPly(dir / "a.ply", {MakeRaw(7, 0.0f)}, layout);
  EXPECT_THROW(LoadSplatPly(dir / "a.ply"), DegreeInferenceError);
}

TEST(LoadSplatPly, FollowsHeaderOrderAndSkipsNormals) {
  TempDir dir;
  PlyLayout canonical;
  canonical.rest_count = 9;
  PlyLayout shuffled = canonical;
  shuffled.reversed_order = true;
  shuffled.with_normals = true;
  const std::vector<RawSplat> raw = {MakeRaw(9, 0.5f), MakeRaw(9, -1.5f)};
  WriteSplatPly(dir / "a.ply", raw, canonical);
  WriteSplatPly(dir / "b.ply", raw, shuffled);
  const SplatCloud a = LoadSplatPly(dir / "a.ply");
  const SplatCloud b = LoadSplatPly(dir / "b.ply");
  ASSERT_EQ(a.gaussians.size(), b.gaussians.size());
  for (size_t i = 0; i < a.gaussians.size(); ++i) {
    EXPECT_EQ(a.gaussians[i].position, b.gaussians[i].position);
    EXPECT_EQ(a.gaussians[i].scale, b.gaussians[i].scale);
    EXPECT_EQ(a.gaussians[i].sh, b.gaussians[i].sh);
    EXPECT_EQ(a.gaussians[i].opacity, b.gaussians[i].opacity);
  }
}

TEST(LoadSplatPly, DeterministicReload) {
  TempDir dir;
  PlyLayout layout;
  layout.rest_count = 24;
  std::vector<RawSplat> raw;
  for (int i = 0; i < 20; ++i) raw.push_back(MakeRaw(24, 0.1f * i));
  WriteSplatPly(dir / "a.ply", raw, layout);
  const SplatCloud a = LoadSplatPly(dir / "a.ply");
  const SplatCloud b = LoadSplatPly(dir / "a.ply");
  for (size_t i = 0; i < a.gaussians.size(); ++i) {
    EXPECT_EQ(a.gaussians[i].position, b.gaussians[i].position);
    EXPECT_EQ(a.gaussians[i].rotation.coeffs(), b.gaussians[i].rotation.coeffs());
    EXPECT_EQ(a.gaussians[i].scale, b.gaussians[i].scale);
    EXPECT_EQ(a.gaussians[i].opacity, b.gaussians[i].opacity);
    EXPECT_EQ(a.gaussians[i].sh, b.gaussians[i].sh);
  }
}

TEST(LoadSplatPly, MissingPropertyIsNamed) {
  TempDir dir;
  PlyLayout layout;
  layout.omit_properties = {"scale_1"};
  WriteSplatPly(dir / "a.ply", {MakeRaw(0, 0.0f)}, layout);
  try {
    LoadSplatPly(dir / "a.ply");
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("scale_1"), std::string::npos) << e.what();
  }
}

TEST(LoadSplatPly, ExtraPropertyIsNamed) {
  TempDir dir;
  PlyLayout layout;
  layout.extra_properties = {"red"};
  WriteSplatPly(dir / "a.ply", {MakeRaw(0, 0.0f)}, layout);
  try {
    LoadSplatPly(dir / "a.ply");
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("red"), std::string::npos) << e.what();
  }
}

TEST(LoadSplatPly, TruncatedBodyReportsOffset) {
  TempDir dir;
  // 14 float properties = 56 bytes per vertex; drop the last 10 bytes.
  WriteSplatPly(dir / "a.ply", {MakeRaw(0, 0.0f), MakeRaw(0, 1.0f)}, PlyLayout{}, 10);
  try {
    LoadSplatPly(dir / "a.ply");
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("byte offset"), std::string::npos) << e.what();
  }
}

TEST(LoadSplatPly, RejectsAsciiFormat) {
  TempDir dir;
  WriteSplatPly(dir / "a.ply", {MakeRaw(0, 0.0f)}, PlyLayout{}, 0, "format ascii 1.0");
  EXPECT_THROW(LoadSplatPly(dir / "a.ply"), FormatError);
}

TEST(LoadSplatPly, MissingFile) {
  EXPECT_THROW(LoadSplatPly("/nonexistent/scene.ply"), IoError);
}

}  // namespace
}  // namespace splatview
