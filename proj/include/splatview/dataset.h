#pragma once

#include <filesystem>
#include <vector>

#include "splatview/colmap.h"

namespace splatview {

// A COLMAP text/binary model plus the directory holding its images.
struct DatasetModel {
  std::vector<CameraIntrinsics> cameras;
  std::vector<ImageRecord> images;
  std::filesystem::path image_dir;
};

// Loads a dataset directory. The model files are looked up in `dir`,
// `dir/sparse/0` and `dir/sparse`; images in `dir/images` if it exists,
// otherwise in `dir` itself.
DatasetModel LoadDatasetModel(const std::filesystem::path& dir);

// Referential integrity, unique names and, when check_files is set, that
// every image file exists. Throws IntegrityError.
void ValidateDatasetModel(const DatasetModel& model, bool check_files);

enum class FileTransfer {
  kCopy,
  kSymlink,
};

// Builds an augmented dataset in out_dir: ground images first, then novel
// images, with image ids renumbered from 1 and novel camera ids shifted past
// the largest ground camera id. Image files land in out_dir/images and the
// combined cameras.txt / images.txt (2D points stripped) in out_dir.
DatasetModel MergeModels(const DatasetModel& ground, const DatasetModel& novel,
                         const std::filesystem::path& out_dir,
                         FileTransfer transfer = FileTransfer::kCopy);

}  // namespace splatview
