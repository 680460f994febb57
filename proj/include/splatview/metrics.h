#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "splatview/image.h"

namespace splatview {

struct SsimParams {
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
  int window_size = 11;
  double window_sigma = 1.5;
};

// Mean windowed SSIM over all pixels and channels. Local statistics use a
// normalized Gaussian window with symmetric (edge-repeating) reflection at
// the borders. Throws ValidationError on a size mismatch.
double Ssim(const ImageBuffer& a, const ImageBuffer& b, const SsimParams& params = {});

// 10 * log10(R^2 / MSE) over all pixels and channels; +infinity when the
// images are identical.
double Psnr(const ImageBuffer& a, const ImageBuffer& b, double max_value = 1.0);

struct UsafReading {
  int group = 0;
  int element = 1;  // 1..6
};

// Line pairs per millimetre of a USAF-1951 target element,
// 2^(group + (element - 1) / 6).
double UsafLpPerMm(const UsafReading& reading);

struct BarContrast {
  double contrast = 0.0;
  bool resolvable = false;
  int peaks = 0;
};

// Michelson contrast of a line profile drawn across one three-bar element.
// Bars are the interior maxima of the profile; contrast compares the
// brightest bar with the darkest gap between bars. The element counts as
// resolved when exactly three bars are found and the contrast reaches
// `threshold`.
BarContrast BarContrastResolvable(std::span<const double> profile, double threshold = 0.1);

struct MetricsRow {
  std::string name;
  double ssim = 0.0;
  double psnr_db = 0.0;
  std::optional<double> lpips;  // filled from an external tool, if at all
};

struct MetricsReport {
  std::vector<MetricsRow> rows;  // sorted by name
  double mean_ssim = 0.0;
  double mean_psnr_db = 0.0;
  std::optional<double> mean_lpips;
  std::vector<std::string> warnings;
};

// Compares same-named PNG files in two directories. Names present on one
// side only produce a warning and are skipped. Throws EmptyComparisonError if
// nothing matches.
MetricsReport CompareImageSets(const std::filesystem::path& reference_dir,
                               const std::filesystem::path& test_dir,
                               const SsimParams& params = {});

// Recomputes the mean fields from the rows.
void UpdateMeans(MetricsReport& report);

// Merges a `name,lpips` CSV produced elsewhere into the report rows.
void MergeLpipsCsv(MetricsReport& report, const std::filesystem::path& csv_path);

// `name,ssim,psnr_db[,lpips]` rows, then a final `mean` row. Infinite PSNR
// is written as `inf`.
std::string FormatReportCsv(const MetricsReport& report);
std::string FormatReportText(const MetricsReport& report);

}  // namespace splatview
