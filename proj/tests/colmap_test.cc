#include "splatview/colmap.h"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "splatview/error.h"
#include "test_util.h"

namespace splatview {
namespace {

using testing::TempDir;

void WriteText(const std::filesystem::path& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

std::string ReadText(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void ExpectRecordsNear(const std::vector<ImageRecord>& a, const std::vector<ImageRecord>& b,
                       double tol) {
  ASSERT_EQ(a.size(), b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].image_id, b[i].image_id);
    EXPECT_EQ(a[i].camera_id, b[i].camera_id);
    EXPECT_EQ(a[i].name, b[i].name);
    EXPECT_LE((a[i].pose.q.coeffs() - b[i].pose.q.coeffs()).cwiseAbs().maxCoeff(), tol);
    EXPECT_LE((a[i].pose.t - b[i].pose.t).cwiseAbs().maxCoeff(), tol);
    ASSERT_EQ(a[i].points2d.size(), b[i].points2d.size());
    for (size_t k = 0; k < a[i].points2d.size(); ++k) {
      EXPECT_NEAR(a[i].points2d[k].x, b[i].points2d[k].x, tol);
      EXPECT_NEAR(a[i].points2d[k].y, b[i].points2d[k].y, tol);
      EXPECT_EQ(a[i].points2d[k].point3d_id, b[i].points2d[k].point3d_id);
    }
  }
}

TEST(ReadCamerasText, Pinhole) {
  TempDir dir;
  WriteText(dir / "cameras.txt", "# comment\n1 PINHOLE 1600 1200 1000 1000 800 600\n");
  const auto cams = ReadCamerasText(dir / "cameras.txt");
  ASSERT_EQ(cams.size(), 1u);
  EXPECT_EQ(cams[0].camera_id, 1u);
  EXPECT_EQ(cams[0].model, CameraModel::kPinhole);
  EXPECT_EQ(cams[0].width, 1600u);
  EXPECT_EQ(cams[0].height, 1200u);
  EXPECT_EQ(cams[0].fx, 1000.0);
  EXPECT_EQ(cams[0].fy, 1000.0);
  EXPECT_EQ(cams[0].cx, 800.0);
  EXPECT_EQ(cams[0].cy, 600.0);
}

TEST(ReadCamerasText, SimplePinholeExpands) {
  TempDir dir;
  WriteText(dir / "cameras.txt", "1 SIMPLE_PINHOLE 100 100 50 50 50\n");
  const auto cams = ReadCamerasText(dir / "cameras.txt");
  ASSERT_EQ(cams.size(), 1u);
  EXPECT_EQ(cams[0].fx, 50.0);
  EXPECT_EQ(cams[0].fy, 50.0);
}

TEST(ReadCamerasText, RejectsDistortionModel) {
  TempDir dir;
  WriteText(dir / "cameras.txt", "1 RADIAL 100 100 50 50 50 0.1\n");
  try {
    ReadCamerasText(dir / "cameras.txt");
    FAIL() << "expected UnsupportedModelError";
  } catch (const UnsupportedModelError& e) {
    EXPECT_NE(std::string(e.what()).find("RADIAL"), std::string::npos);
  }
}

TEST(ReadCamerasText, WrongParamCountNamesLine) {
  TempDir dir;
  WriteText(dir / "cameras.txt", "# header\n\n1 PINHOLE 100 100 50 50 50\n");
  try {
    ReadCamerasText(dir / "cameras.txt");
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("cameras.txt:3"), std::string::npos) << e.what();
  }
}

TEST(ReadCamerasText, RejectsPrincipalPointOutsideImage) {
  TempDir dir;
  WriteText(dir / "cameras.txt", "1 PINHOLE 100 100 50 50 150 50\n");
  EXPECT_THROW(ReadCamerasText(dir / "cameras.txt"), ValidationError);
}

TEST(ReadImagesText, IdentityPoseWithoutPoints) {
  TempDir dir;
  WriteText(dir / "images.txt", "# c\n1 1 0 0 0 0 0 0 1 novel_0001.png\n\n");
  const auto images = ReadImagesText(dir / "images.txt");
  ASSERT_EQ(images.size(), 1u);
  EXPECT_EQ(images[0].image_id, 1u);
  EXPECT_EQ(images[0].pose.q.coeffs(), Quat::Identity().coeffs());
  EXPECT_EQ(images[0].pose.t, Vec3::Zero());
  EXPECT_EQ(images[0].name, "novel_0001.png");
  EXPECT_TRUE(images[0].points2d.empty());
}

TEST(ReadImagesText, SinglePoint) {
  TempDir dir;
  WriteText(dir / "images.txt", "1 1 0 0 0 0 0 0 1 a.png\n10.5 20.5 7\n");
  const auto images = ReadImagesText(dir / "images.txt");
  ASSERT_EQ(images[0].points2d.size(), 1u);
  EXPECT_EQ(images[0].points2d[0], (Point2D{10.5, 20.5, 7}));
}

TEST(ReadImagesText, TruncatedRecord) {
  TempDir dir;
  WriteText(dir / "images.txt", "1 1 0 0 0 0 0 0 1 a.png\n\n2 1 0 0 0 0 0 0 1 b.png\n");
  try {
    ReadImagesText(dir / "images.txt");
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("images.txt:4"), std::string::npos) << e.what();
  }
}

TEST(ReadImagesText, BadPointTriplets) {
  TempDir dir;
  WriteText(dir / "images.txt", "1 1 0 0 0 0 0 0 1 a.png\n1 2 3 4\n");
  EXPECT_THROW(ReadImagesText(dir / "images.txt"), FormatError);
}

TEST(ReadImagesText, QuaternionNormalization) {
  TempDir dir;
  WriteText(dir / "ok.txt", "1 1.0005 0 0 0 0 0 0 1 a.png\n\n");
  const auto ok = ReadImagesText(dir / "ok.txt");
  EXPECT_NEAR(ok[0].pose.q.norm(), 1.0, 1e-15);
  EXPECT_EQ(ok[0].pose.q.w(), 1.0);

  WriteText(dir / "bad.txt", "1 1.01 0 0 0 0 0 0 1 a.png\n\n");
  EXPECT_THROW(ReadImagesText(dir / "bad.txt"), ValidationError);
}

TEST(ReadImagesText, RejectsPathInName) {
  TempDir dir;
  WriteText(dir / "images.txt", "1 1 0 0 0 0 0 0 1 sub/a.png\n\n");
  EXPECT_THROW(ReadImagesText(dir / "images.txt"), ValidationError);
}

TEST(ReadCamerasBinary, MatchesTextParse) {
  TempDir dir;
  WriteText(dir / "cameras.txt", "1 PINHOLE 1600 1200 1000 1000 800 600\n");
  const auto text = ReadCamerasText(dir / "cameras.txt");
  testing::WriteBytes(dir / "cameras.bin", testing::EncodeCamerasBinary(text));
  EXPECT_EQ(ReadCamerasBinary(dir / "cameras.bin"), text);
}

TEST(ReadCamerasBinary, EmptyAndBroken) {
  TempDir dir;
  testing::WriteBytes(dir / "empty.bin", testing::EncodeCamerasBinary({}));
  EXPECT_TRUE(ReadCamerasBinary(dir / "empty.bin").empty());

  std::string bytes = testing::EncodeCamerasBinary({testing::MakePinhole(64, 48, 50)});
  testing::WriteBytes(dir / "truncated.bin", bytes.substr(0, bytes.size() - 5));
  try {
    ReadCamerasBinary(dir / "truncated.bin");
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("byte offset"), std::string::npos) << e.what();
  }

  testing::WriteBytes(dir / "trailing.bin", bytes + "xx");
  EXPECT_THROW(ReadCamerasBinary(dir / "trailing.bin"), FormatError);

  std::string bad_model = bytes;
  const int32_t radial = 3;
  std::memcpy(bad_model.data() + 12, &radial, 4);
  testing::WriteBytes(dir / "model.bin", bad_model);
  EXPECT_THROW(ReadCamerasBinary(dir / "model.bin"), UnsupportedModelError);
}

TEST(ReadImagesBinary, IdentityAndSentinel) {
  TempDir dir;
  ImageRecord rec;
  rec.image_id = 1;
  rec.camera_id = 1;
  rec.name = "novel_0001.png";
  testing::WriteBytes(dir / "a.bin", testing::EncodeImagesBinary({rec}));
  WriteText(dir / "a.txt", "1 1 0 0 0 0 0 0 1 novel_0001.png\n\n");
  EXPECT_EQ(ReadImagesBinary(dir / "a.bin"), ReadImagesText(dir / "a.txt"));

  rec.points2d = {{1.0, 2.0, -1}, {3.0, 4.0, 12}};
  testing::WriteBytes(dir / "b.bin", testing::EncodeImagesBinary({rec}));
  const auto parsed = ReadImagesBinary(dir / "b.bin");
  EXPECT_EQ(parsed[0].points2d[0].point3d_id, -1);
  EXPECT_EQ(parsed[0].points2d[1].point3d_id, 12);
}

TEST(ColmapFormats, TextBinaryCrossFormatRandomized) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    TempDir dir;
    const auto cams = testing::RandomCameras(rng, 1 + trial % 4);
    const auto images = testing::RandomImages(rng, 1 + trial % 7, static_cast<int>(cams.size()), 6);
    WriteCamerasText(dir / "cameras.txt", cams);
    WriteImagesText(dir / "images.txt", images, cams, true);
    testing::WriteBytes(dir / "cameras.bin", testing::EncodeCamerasBinary(cams));
    testing::WriteBytes(dir / "images.bin", testing::EncodeImagesBinary(images));
    EXPECT_EQ(ReadCamerasText(dir / "cameras.txt"), ReadCamerasBinary(dir / "cameras.bin"));
    EXPECT_EQ(ReadImagesText(dir / "images.txt"), ReadImagesBinary(dir / "images.bin"));
  }
}

TEST(WriteImagesText, StrippedPointsLeaveEmptyLines) {
  TempDir dir;
  std::mt19937_64 rng(1);
  auto images = testing::RandomImages(rng, 5, 1, 10);
  images[0].points2d.push_back({1, 2, 3});
  WriteImagesText(dir / "images.txt", images, false);
  std::ifstream in(dir / "images.txt");
  std::string line;
  std::vector<std::string> data;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] == '#') continue;
    data.push_back(line);
  }
  ASSERT_EQ(data.size(), 10u);
  for (size_t i = 1; i < data.size(); i += 2) EXPECT_EQ(data[i], "");
  for (const auto& rec : ReadImagesText(dir / "images.txt")) EXPECT_TRUE(rec.points2d.empty());
}

TEST(WriteImagesText, EmptyListIsHeaderOnly) {
  TempDir dir;
  WriteImagesText(dir / "images.txt", std::vector<ImageRecord>{}, true);
  std::ifstream in(dir / "images.txt");
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) {
    ++lines;
    EXPECT_EQ(line[0], '#');
  }
  EXPECT_GT(lines, 0);
  EXPECT_TRUE(ReadImagesText(dir / "images.txt").empty());
}

TEST(WriteImagesText, DanglingCameraId) {
  TempDir dir;
  ImageRecord rec;
  rec.image_id = 1;
  rec.camera_id = 9;
  rec.name = "a.png";
  const std::vector<CameraIntrinsics> cams = {testing::MakePinhole(64, 48, 50)};
  EXPECT_THROW(WriteImagesText(dir / "images.txt", std::vector{rec}, cams, false), IntegrityError);
}

TEST(ColmapText, ParseWriteRoundTripAndIdempotence) {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 20; ++trial) {
    TempDir dir;
    const auto cams = testing::RandomCameras(rng, 3);
    const auto images = testing::RandomImages(rng, 8, 3, 5);
    WriteCamerasText(dir / "c1.txt", cams);
    WriteImagesText(dir / "i1.txt", images, cams, true);
    const auto cams2 = ReadCamerasText(dir / "c1.txt");
    const auto images2 = ReadImagesText(dir / "i1.txt");
    EXPECT_EQ(cams2, cams);
    ExpectRecordsNear(images2, images, 1e-9);
    WriteCamerasText(dir / "c2.txt", cams2);
    WriteImagesText(dir / "i2.txt", images2, cams2, true);
    EXPECT_EQ(ReadText(dir / "c1.txt"), ReadText(dir / "c2.txt"));
    EXPECT_EQ(ReadText(dir / "i1.txt"), ReadText(dir / "i2.txt"));
  }
}

TEST(ValidateModel, DetectsDanglingAndDuplicates) {
  const std::vector<CameraIntrinsics> cams = {testing::MakePinhole(64, 48, 50)};
  ImageRecord a;
  a.image_id = 1;
  a.camera_id = 1;
  a.name = "a.png";
  ImageRecord b = a;
  b.image_id = 2;
  b.name = "b.png";
  EXPECT_NO_THROW(ValidateModel(cams, std::vector{a, b}));
  b.camera_id = 2;
  EXPECT_THROW(ValidateModel(cams, std::vector{a, b}), IntegrityError);
  b.camera_id = 1;
  b.image_id = 1;
  EXPECT_THROW(ValidateModel(cams, std::vector{a, b}), IntegrityError);
}

TEST(CameraCenter, Examples) {
  Pose p;
  p.t = Vec3(1, 2, 3);
  EXPECT_EQ(CameraCenter(p), Vec3(-1, -2, -3));

  // R = Rz(90); R^T t = (0, -1, 0), so C = (0, 1, 0).
  p.q = Quat(std::sqrt(0.5), 0, 0, std::sqrt(0.5));
  p.t = Vec3(1, 0, 0);
  EXPECT_LT((CameraCenter(p) - Vec3(0, 1, 0)).norm(), 1e-15);
}

TEST(CameraCenter, MapsToOrigin) {
  std::mt19937_64 rng(4);
  for (const auto& rec : testing::RandomImages(rng, 100, 1, 0)) {
    const Vec3 c = CameraCenter(rec.pose);
    EXPECT_LT((rec.pose.R() * c + rec.pose.t).norm(), 1e-12);
  }
}

TEST(ReadModel, PrefersTextAndValidates) {
  TempDir dir;
  const std::vector<CameraIntrinsics> cams = {testing::MakePinhole(64, 48, 50)};
  ImageRecord rec;
  rec.image_id = 1;
  rec.camera_id = 1;
  rec.name = "a.png";
  WriteModelText(dir.path(), ColmapModel{cams, {rec}}, false);
  const ColmapModel model = ReadModel(dir.path());
  EXPECT_EQ(model.cameras, cams);
  EXPECT_EQ(model.images.size(), 1u);
  EXPECT_THROW(ReadModel(dir / "missing"), IoError);
}

}  // namespace
}  // namespace splatview
