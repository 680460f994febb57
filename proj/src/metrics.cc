#include "splatview/metrics.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>

#include <fmt/format.h>

#include "splatview/error.h"

namespace splatview {
namespace {

namespace fs = std::filesystem;

void CheckSameSize(const ImageBuffer& a, const ImageBuffer& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw ValidationError(fmt::format("image size mismatch: {}x{} vs {}x{}", a.width(),
                                      a.height(), b.width(), b.height()));
  }
  if (a.empty()) {
    throw ValidationError("cannot compare empty images");
  }
}

// Symmetric reflection: ... c b a | a b c ... | c b a ...
size_t Reflect(long i, long n) {
  const long period = 2 * n;
  long m = i % period;
  if (m < 0) m += period;
  return static_cast<size_t>(m < n ? m : period - 1 - m);
}

std::vector<double> GaussianWindow(int size, double sigma) {
  std::vector<double> w(size);
  const int half = size / 2;
  double sum = 0.0;
  for (int i = 0; i < size; ++i) {
    const double d = i - half;
    w[i] = std::exp(-d * d / (2.0 * sigma * sigma));
    sum += w[i];
  }
  for (double& v : w) v /= sum;
  return w;
}

// Separable filtering of a width x height plane.
std::vector<double> Filter(const std::vector<double>& plane, size_t width, size_t height,
                           const std::vector<double>& window) {
  const long half = static_cast<long>(window.size()) / 2;
  std::vector<double> tmp(plane.size()), out(plane.size());
  for (size_t y = 0; y < height; ++y) {
    for (size_t x = 0; x < width; ++x) {
      double acc = 0.0;
      for (long k = -half; k <= half; ++k) {
        acc += window[k + half] * plane[y * width + Reflect(static_cast<long>(x) + k, width)];
      }
      tmp[y * width + x] = acc;
    }
  }
  for (size_t y = 0; y < height; ++y) {
    for (size_t x = 0; x < width; ++x) {
      double acc = 0.0;
      for (long k = -half; k <= half; ++k) {
        acc += window[k + half] * tmp[Reflect(static_cast<long>(y) + k, height) * width + x];
      }
      out[y * width + x] = acc;
    }
  }
  return out;
}

std::string FormatPsnr(double db) {
  return std::isinf(db) ? std::string("inf") : fmt::format("{:.10g}", db);
}

}  // namespace

double Ssim(const ImageBuffer& a, const ImageBuffer& b, const SsimParams& p) {
  CheckSameSize(a, b);
  if (!(p.k1 > 0 && p.k2 > 0 && p.dynamic_range > 0) || p.window_size < 1 ||
      p.window_size % 2 == 0 || !(p.window_sigma > 0)) {
    throw ValidationError("invalid SSIM parameters");
  }
  const double c1 = (p.k1 * p.dynamic_range) * (p.k1 * p.dynamic_range);
  const double c2 = (p.k2 * p.dynamic_range) * (p.k2 * p.dynamic_range);
  const size_t w = a.width(), h = a.height(), n = w * h;
  const std::vector<double> window = GaussianWindow(p.window_size, p.window_sigma);

  double total = 0.0;
  std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
  for (size_t c = 0; c < 3; ++c) {
    for (size_t i = 0; i < n; ++i) {
      x[i] = a.data()[i * 3 + c];
      y[i] = b.data()[i * 3 + c];
      xx[i] = x[i] * x[i];
      yy[i] = y[i] * y[i];
      xy[i] = x[i] * y[i];
    }
    const auto mu_x = Filter(x, w, h, window);
    const auto mu_y = Filter(y, w, h, window);
    const auto e_xx = Filter(xx, w, h, window);
    const auto e_yy = Filter(yy, w, h, window);
    const auto e_xy = Filter(xy, w, h, window);
    for (size_t i = 0; i < n; ++i) {
      const double var_x = e_xx[i] - mu_x[i] * mu_x[i];
      const double var_y = e_yy[i] - mu_y[i] * mu_y[i];
      const double cov = e_xy[i] - mu_x[i] * mu_y[i];
      const double num = (2.0 * mu_x[i] * mu_y[i] + c1) * (2.0 * cov + c2);
      const double den = (mu_x[i] * mu_x[i] + mu_y[i] * mu_y[i] + c1) * (var_x + var_y + c2);
      total += num / den;
    }
  }
  return total / static_cast<double>(3 * n);
}

double Psnr(const ImageBuffer& a, const ImageBuffer& b, double max_value) {
  CheckSameSize(a, b);
  if (!(max_value > 0)) {
    throw ValidationError("PSNR dynamic range must be positive");
  }
  double sum = 0.0;
  const auto& da = a.data();
  const auto& db = b.data();
  for (size_t i = 0; i < da.size(); ++i) {
    const double d = static_cast<double>(da[i]) - static_cast<double>(db[i]);
    sum += d * d;
  }
  const double mse = sum / static_cast<double>(da.size());
  if (mse == 0.0) {
    return std::numeric_limits<double>::infinity();
  }
  return 10.0 * std::log10(max_value * max_value / mse);
}

double UsafLpPerMm(const UsafReading& r) {
  if (r.element < 1 || r.element > 6) {
    throw ValidationError(fmt::format("USAF element {} outside [1, 6]", r.element));
  }
  return std::exp2(static_cast<double>(r.group) + static_cast<double>(r.element - 1) / 6.0);
}

BarContrast BarContrastResolvable(std::span<const double> profile, double threshold) {
  if (profile.size() < 7) {
    throw ValidationError(
        fmt::format("bar profile needs at least 7 samples, got {}", profile.size()));
  }
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw ValidationError(fmt::format("contrast threshold {} outside (0, 1)", threshold));
  }
  const auto [lo_it, hi_it] = std::minmax_element(profile.begin(), profile.end());
  const double range = *hi_it - *lo_it;
  if (range < 1e-6) {
    return {};
  }

  // Alternating extrema with hysteresis: an extremum is confirmed once the
  // signal has moved back by at least `delta`. A peak only counts if it was
  // preceded by a confirmed rise, so bars cut by the profile ends are ignored.
  const double delta = 0.1 * range;
  enum class Mode { kUnknown, kSeekMax, kSeekMin } mode = Mode::kUnknown;
  double hi = profile[0], lo = profile[0];
  std::vector<double> peaks;
  std::vector<std::pair<size_t, double>> valleys;  // (peaks seen so far, value)
  for (const double v : profile) {
    switch (mode) {
      case Mode::kUnknown:
        hi = std::max(hi, v);
        lo = std::min(lo, v);
        if (v >= lo + delta) {
          valleys.emplace_back(0, lo);
          mode = Mode::kSeekMax;
          hi = v;
        } else if (v <= hi - delta) {
          mode = Mode::kSeekMin;
          lo = v;
        }
        break;
      case Mode::kSeekMax:
        if (v > hi) {
          hi = v;
        } else if (v <= hi - delta) {
          peaks.push_back(hi);
          mode = Mode::kSeekMin;
          lo = v;
        }
        break;
      case Mode::kSeekMin:
        if (v < lo) {
          lo = v;
        } else if (v >= lo + delta) {
          valleys.emplace_back(peaks.size(), lo);
          mode = Mode::kSeekMax;
          hi = v;
        }
        break;
    }
  }

  BarContrast result;
  result.peaks = static_cast<int>(peaks.size());
  if (peaks.empty()) {
    return result;
  }
  const double peak = *std::max_element(peaks.begin(), peaks.end());
  // Gaps between bars: valleys confirmed after the first and before the last peak.
  double valley = std::numeric_limits<double>::infinity();
  for (const auto& [seen, value] : valleys) {
    if (seen >= 1 && seen < peaks.size()) valley = std::min(valley, value);
  }
  if (std::isinf(valley)) {
    for (const auto& [seen, value] : valleys) valley = std::min(valley, value);
  }
  if (std::isinf(valley) || !(peak + valley > 0.0)) {
    return result;
  }
  result.contrast = (peak - valley) / (peak + valley);
  result.resolvable = result.peaks == 3 && result.contrast >= threshold;
  return result;
}

void UpdateMeans(MetricsReport& report) {
  if (report.rows.empty()) {
    report.mean_ssim = report.mean_psnr_db = 0.0;
    report.mean_lpips.reset();
    return;
  }
  double ssim = 0.0, psnr = 0.0, lpips = 0.0;
  size_t lpips_count = 0;
  for (const auto& row : report.rows) {
    ssim += row.ssim;
    psnr += row.psnr_db;
    if (row.lpips) {
      lpips += *row.lpips;
      ++lpips_count;
    }
  }
  const double n = static_cast<double>(report.rows.size());
  report.mean_ssim = ssim / n;
  report.mean_psnr_db = psnr / n;
  report.mean_lpips.reset();
  if (lpips_count > 0) {
    report.mean_lpips = lpips / static_cast<double>(lpips_count);
  }
}

MetricsReport CompareImageSets(const fs::path& reference_dir, const fs::path& test_dir,
                               const SsimParams& params) {
  const auto list_pngs = [](const fs::path& dir) {
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) {
      throw IoError(fmt::format("{} is not a directory", dir.string()));
    }
    std::set<std::string> names;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (!entry.is_regular_file()) continue;
      std::string ext = entry.path().extension().string();
      std::transform(ext.begin(), ext.end(), ext.begin(),
                     [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
      if (ext == ".png") names.insert(entry.path().filename().string());
    }
    return names;
  };
  const auto ref_names = list_pngs(reference_dir);
  const auto test_names = list_pngs(test_dir);

  MetricsReport report;
  for (const auto& name : ref_names) {
    if (!test_names.count(name)) {
      report.warnings.push_back(fmt::format("'{}' missing from {}", name, test_dir.string()));
      continue;
    }
    const ImageBuffer ref = LoadPng(reference_dir / name);
    const ImageBuffer test = LoadPng(test_dir / name);
    MetricsRow row;
    row.name = name;
    row.ssim = Ssim(ref, test, params);
    row.psnr_db = Psnr(ref, test, 1.0);
    report.rows.push_back(std::move(row));
  }
  for (const auto& name : test_names) {
    if (!ref_names.count(name)) {
      report.warnings.push_back(fmt::format("'{}' missing from {}", name, reference_dir.string()));
    }
  }
  if (report.rows.empty()) {
    throw EmptyComparisonError(fmt::format("no same-named PNG files in {} and {}",
                                           reference_dir.string(), test_dir.string()));
  }
  UpdateMeans(report);
  return report;
}

void MergeLpipsCsv(MetricsReport& report, const fs::path& csv_path) {
  std::ifstream in(csv_path);
  if (!in) {
    throw IoError(fmt::format("cannot open {}", csv_path.string()));
  }
  std::map<std::string, MetricsRow*> by_name;
  for (auto& row : report.rows) by_name[row.name] = &row;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const size_t comma = line.find(',');
    if (comma == std::string::npos) {
      throw FormatError(fmt::format("{}:{}: expected 'name,lpips'", csv_path.string(), line_no));
    }
    const std::string name = line.substr(0, comma);
    const std::string value = line.substr(comma + 1);
    if (line_no == 1 && name == "name") continue;
    if (name == "mean") continue;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || ptr != value.data() + value.size()) {
      throw FormatError(
          fmt::format("{}:{}: cannot parse '{}' as a number", csv_path.string(), line_no, value));
    }
    const auto it = by_name.find(name);
    if (it == by_name.end()) {
      report.warnings.push_back(fmt::format("LPIPS value for unknown image '{}'", name));
      continue;
    }
    it->second->lpips = v;
  }
  UpdateMeans(report);
}

std::string FormatReportCsv(const MetricsReport& report) {
  const bool with_lpips = report.mean_lpips.has_value();
  std::string out = with_lpips ? "name,ssim,psnr_db,lpips\n" : "name,ssim,psnr_db\n";
  for (const auto& row : report.rows) {
    out += fmt::format("{},{:.10g},{}", row.name, row.ssim, FormatPsnr(row.psnr_db));
    if (with_lpips) out += row.lpips ? fmt::format(",{:.10g}", *row.lpips) : std::string(",");
    out += '\n';
  }
  out += fmt::format("mean,{:.10g},{}", report.mean_ssim, FormatPsnr(report.mean_psnr_db));
  if (with_lpips) out += fmt::format(",{:.10g}", *report.mean_lpips);
  out += '\n';
  return out;
}

std::string FormatReportText(const MetricsReport& report) {
  size_t width = 4;
  for (const auto& row : report.rows) width = std::max(width, row.name.size());
  std::string out = fmt::format("{:<{}}  {:>8}  {:>10}\n", "name", width, "ssim", "psnr_db");
  const auto psnr_cell = [](double db) {
    return std::isinf(db) ? std::string("inf") : fmt::format("{:.4f}", db);
  };
  for (const auto& row : report.rows) {
    out += fmt::format("{:<{}}  {:>8.6f}  {:>10}\n", row.name, width, row.ssim, psnr_cell(row.psnr_db));
  }
  out += fmt::format("{:<{}}  {:>8.6f}  {:>10}\n", "mean", width, report.mean_ssim,
                     psnr_cell(report.mean_psnr_db));
  for (const auto& w : report.warnings) out += fmt::format("warning: {}\n", w);
  return out;
}

}  // namespace splatview
