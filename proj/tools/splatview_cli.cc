// Command-line front end: rig generation, rendering, dataset augmentation and
// image metrics.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "splatview/camera_rig.h"
#include "splatview/colmap.h"
#include "splatview/dataset.h"
#include "splatview/error.h"
#include "splatview/metrics.h"
#include "splatview/renderer.h"
#include "splatview/splat_ply.h"

namespace fs = std::filesystem;
using namespace splatview;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitFormat = 2;
constexpr int kExitIntegrity = 3;
constexpr int kExitIo = 4;

int ExitCodeFor(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kFormat:
    case ErrorKind::kValidation:
      return kExitFormat;
    case ErrorKind::kIntegrity:
      return kExitIntegrity;
    case ErrorKind::kIo:
      return kExitIo;
  }
  return kExitFormat;
}

Convention ParseConvention(const std::string& name) {
  return name == "graphics" ? Convention::kGraphics : Convention::kVision;
}

ColmapModel ToColmap(const DatasetModel& d) { return ColmapModel{d.cameras, d.images}; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Novel-view rendering and evaluation toolkit for Gaussian splat scenes"};
  app.require_subcommand(1);

  // rig
  std::string rig_spec, rig_out;
  auto* rig = app.add_subcommand("rig", "Generate ring camera poses as a COLMAP text model");
  rig->add_option("--spec", rig_spec, "Rig description file")->required();
  rig->add_option("--out", rig_out, "Output model directory")->required();

  // offset-rig
  std::string offset_model, offset_out;
  double offset_distance = 0.0;
  auto* offset_rig =
      app.add_subcommand("offset-rig", "Displace existing poses along their camera x/y axes");
  offset_rig->add_option("--model", offset_model, "Input model directory")->required();
  offset_rig->add_option("--offset", offset_distance, "Offset distance (world units)")->required();
  offset_rig->add_option("--out", offset_out, "Output model directory")->required();

  // render
  std::string render_splat, render_model, render_out;
  std::vector<double> background{0.0, 0.0, 0.0};
  RenderSettings settings;
  auto* render = app.add_subcommand("render", "Render every pose of a model from a splat file");
  render->add_option("--splat", render_splat, "Trained splat PLY file")->required();
  render->add_option("--model", render_model, "COLMAP model directory with the poses")->required();
  render->add_option("--out", render_out, "Output directory for PNGs and the model")->required();
  render->add_option("--background", background, "Background color r,g,b in [0,1]")
      ->delimiter(',')
      ->expected(3);
  render->add_option("--tile", settings.tile_size, "Tile size in pixels")
      ->check(CLI::PositiveNumber);
  render->add_option("--threads", settings.num_threads, "Worker threads (0 = all cores)");

  // convert-pose
  std::string convert_in, convert_out, convert_from, convert_to;
  auto* convert = app.add_subcommand("convert-pose", "Convert a model between camera conventions");
  convert->add_option("--in", convert_in, "Input model directory")->required();
  convert->add_option("--from", convert_from, "Source convention")
      ->required()
      ->check(CLI::IsMember({"graphics", "vision"}));
  convert->add_option("--to", convert_to, "Target convention")
      ->required()
      ->check(CLI::IsMember({"graphics", "vision"}));
  convert->add_option("--out", convert_out, "Output model directory")->required();

  // strip-points
  std::string strip_in, strip_out;
  auto* strip = app.add_subcommand("strip-points", "Drop the 2D point lines from images.txt");
  strip->add_option("--in", strip_in, "Input images.txt")->required();
  strip->add_option("--out", strip_out, "Output images.txt")->required();

  // augment
  std::string aug_ground, aug_novel, aug_out;
  bool aug_link = false;
  auto* augment = app.add_subcommand("augment", "Merge ground-truth and novel-view datasets");
  augment->add_option("--ground", aug_ground, "Ground-truth dataset directory")->required();
  augment->add_option("--novel", aug_novel, "Novel-view dataset directory")->required();
  augment->add_option("--out", aug_out, "Output dataset directory")->required();
  augment->add_flag("--link", aug_link, "Symlink images instead of copying");

  // metrics
  std::string metrics_ref, metrics_test, metrics_csv, metrics_lpips;
  auto* metrics = app.add_subcommand("metrics", "SSIM/PSNR between two image directories");
  metrics->add_option("--ref", metrics_ref, "Reference image directory")->required();
  metrics->add_option("--test", metrics_test, "Test image directory")->required();
  metrics->add_option("--csv", metrics_csv, "Write the report as CSV");
  metrics->add_option("--lpips", metrics_lpips, "Merge externally computed name,lpips CSV");

  // usaf
  int usaf_group = 0, usaf_element = 1;
  auto* usaf = app.add_subcommand("usaf", "Line pairs per mm of a USAF-1951 chart element");
  usaf->add_option("--group", usaf_group, "Group number")->required();
  usaf->add_option("--element", usaf_element, "Element number (1-6)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*rig) {
      const RigSpec spec = ReadRigSpec(rig_spec);
      const auto records = GenerateRig(spec);
      WriteModelText(rig_out, ColmapModel{{spec.intrinsics}, records}, false);
      fmt::print("wrote {} poses to {}\n", records.size(), rig_out);
    } else if (*offset_rig) {
      const DatasetModel model = LoadDatasetModel(offset_model);
      const auto records = GenerateOffsetPoses(model.images, offset_distance);
      WriteModelText(offset_out, ColmapModel{model.cameras, records}, false);
      fmt::print("wrote {} offset poses to {}\n", records.size(), offset_out);
    } else if (*render) {
      settings.background = Vec3(background[0], background[1], background[2]);
      const SplatCloud cloud = LoadSplatPly(render_splat);
      DatasetModel model = LoadDatasetModel(render_model);
      const auto written = RenderBatch(cloud, model.images, model.cameras, settings, render_out);
      WriteModelText(render_out, ToColmap(model), false);
      fmt::print("rendered {} views ({} gaussians, SH degree {}) into {}\n", written.size(),
                 cloud.gaussians.size(), cloud.sh_degree, render_out);
    } else if (*convert) {
      DatasetModel model = LoadDatasetModel(convert_in);
      const Convention from = ParseConvention(convert_from);
      const Convention to = ParseConvention(convert_to);
      for (auto& img : model.images) img.pose = ConvertConvention(img.pose, from, to);
      WriteModelText(convert_out, ToColmap(model), true);
      fmt::print("converted {} poses from {} to {}\n", model.images.size(), convert_from,
                 convert_to);
    } else if (*strip) {
      const auto images = ReadImagesText(strip_in);
      WriteImagesText(strip_out, images, false);
      fmt::print("stripped 2D points from {} records\n", images.size());
    } else if (*augment) {
      const DatasetModel ground = LoadDatasetModel(aug_ground);
      const DatasetModel novel = LoadDatasetModel(aug_novel);
      const DatasetModel merged = MergeModels(
          ground, novel, aug_out, aug_link ? FileTransfer::kSymlink : FileTransfer::kCopy);
      fmt::print("augmented dataset: {} ground + {} novel = {} images in {}\n",
                 ground.images.size(), novel.images.size(), merged.images.size(), aug_out);
    } else if (*metrics) {
      MetricsReport report = CompareImageSets(metrics_ref, metrics_test);
      if (!metrics_lpips.empty()) MergeLpipsCsv(report, metrics_lpips);
      fmt::print("{}", FormatReportText(report));
      if (!metrics_csv.empty()) {
        std::ofstream out(metrics_csv, std::ios::binary | std::ios::trunc);
        out << FormatReportCsv(report);
        if (!out) throw IoError(fmt::format("failed writing {}", metrics_csv));
      }
    } else if (*usaf) {
      fmt::print("{:.4f}\n", UsafLpPerMm({usaf_group, usaf_element}));
    }
  } catch (const Error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return ExitCodeFor(e.kind());
  } catch (const fs::filesystem_error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitIo;
  }
  return 0;
}
