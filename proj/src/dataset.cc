#include "splatview/dataset.h"

#include <algorithm>
#include <map>
#include <set>

#include <fmt/format.h>

#include "splatview/error.h"

namespace splatview {
namespace {

namespace fs = std::filesystem;

bool HasModelFiles(const fs::path& dir) {
  return (fs::exists(dir / "cameras.txt") || fs::exists(dir / "cameras.bin")) &&
         (fs::exists(dir / "images.txt") || fs::exists(dir / "images.bin"));
}

void TransferFile(const fs::path& from, const fs::path& to, FileTransfer transfer) {
  std::error_code ec;
  fs::remove(to, ec);
  ec.clear();
  if (transfer == FileTransfer::kSymlink) {
    fs::create_symlink(fs::absolute(from), to, ec);
  } else {
    fs::copy_file(from, to, fs::copy_options::overwrite_existing, ec);
  }
  if (ec) {
    throw IoError(
        fmt::format("cannot place {} at {}: {}", from.string(), to.string(), ec.message()));
  }
}

}  // namespace

DatasetModel LoadDatasetModel(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    throw IoError(fmt::format("{} is not a directory", dir.string()));
  }
  fs::path model_dir;
  for (const fs::path& candidate : {dir, dir / "sparse" / "0", dir / "sparse"}) {
    if (HasModelFiles(candidate)) {
      model_dir = candidate;
      break;
    }
  }
  if (model_dir.empty()) {
    throw IoError(fmt::format("no COLMAP model found under {}", dir.string()));
  }
  ColmapModel model = ReadModel(model_dir);
  DatasetModel out;
  out.cameras = std::move(model.cameras);
  out.images = std::move(model.images);
  out.image_dir = fs::is_directory(dir / "images") ? dir / "images" : dir;
  return out;
}

void ValidateDatasetModel(const DatasetModel& model, bool check_files) {
  ValidateModel(model.cameras, model.images);
  if (!check_files) return;
  for (const auto& img : model.images) {
    if (!fs::is_regular_file(model.image_dir / img.name)) {
      throw IntegrityError(fmt::format("image file {} is missing",
                                       (model.image_dir / img.name).string()));
    }
  }
}

DatasetModel MergeModels(const DatasetModel& ground, const DatasetModel& novel,
                         const fs::path& out_dir, FileTransfer transfer) {
  ValidateDatasetModel(ground, true);
  ValidateDatasetModel(novel, true);

  std::set<std::string> ground_names;
  for (const auto& img : ground.images) ground_names.insert(img.name);
  for (const auto& img : novel.images) {
    if (ground_names.count(img.name)) {
      throw CollisionError(fmt::format("image name '{}' exists in both datasets", img.name));
    }
  }

  DatasetModel merged;
  merged.image_dir = out_dir / "images";
  merged.cameras = ground.cameras;
  uint32_t max_camera_id = 0;
  for (const auto& cam : ground.cameras) max_camera_id = std::max(max_camera_id, cam.camera_id);
  std::map<uint32_t, uint32_t> novel_camera_ids;
  for (const auto& cam : novel.cameras) {
    CameraIntrinsics moved = cam;
    moved.camera_id = ++max_camera_id;
    novel_camera_ids[cam.camera_id] = moved.camera_id;
    merged.cameras.push_back(moved);
  }

  uint32_t next_image_id = 1;
  for (const auto& img : ground.images) {
    ImageRecord rec = img;
    rec.image_id = next_image_id++;
    rec.points2d.clear();
    merged.images.push_back(std::move(rec));
  }
  for (const auto& img : novel.images) {
    ImageRecord rec = img;
    rec.image_id = next_image_id++;
    rec.camera_id = novel_camera_ids.at(img.camera_id);
    rec.points2d.clear();
    merged.images.push_back(std::move(rec));
  }
  ValidateModel(merged.cameras, merged.images);

  std::error_code ec;
  fs::create_directories(merged.image_dir, ec);
  if (ec) {
    throw IoError(fmt::format("cannot create {}: {}", merged.image_dir.string(), ec.message()));
  }
  for (const auto& img : ground.images) {
    TransferFile(ground.image_dir / img.name, merged.image_dir / img.name, transfer);
  }
  for (const auto& img : novel.images) {
    TransferFile(novel.image_dir / img.name, merged.image_dir / img.name, transfer);
  }
  WriteModelText(out_dir, ColmapModel{merged.cameras, merged.images}, false);
  return merged;
}

}  // namespace splatview
