#include "tirtha/ingest/iqa.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "tirtha/common/error.hpp"
#include "tirtha/kernels/kernels.hpp"

namespace tirtha::ingest {

DrMode parse_dr_mode(std::string_view text) {
  if (text == "percentile") return DrMode::Percentile;
  if (text == "minmax") return DrMode::MinMax;
  throw Error(ErrorCode::Validation, "iqa.dr_mode must be 'percentile' or 'minmax'");
}

LumaPlane to_luma(const Raster& rgb) {
  if (rgb.channels != 3) throw Error(ErrorCode::Validation, "luma conversion expects RGB");
  LumaPlane plane;
  plane.width = rgb.width;
  plane.height = rgb.height;
  plane.values.resize(rgb.pixel_count());
  kernels::fast::luma_bt601(rgb.pixels, plane.values);
  return plane;
}

int histogram_percentile(const std::array<std::uint64_t, 256>& histogram, double p) {
  std::uint64_t total = 0;
  for (auto c : histogram) total += c;
  if (total == 0) return 0;
  auto rank = static_cast<std::uint64_t>(std::ceil(p * static_cast<double>(total)));
  rank = std::clamp<std::uint64_t>(rank, 1, total);
  std::uint64_t cumulative = 0;
  for (int v = 0; v < 256; ++v) {
    cumulative += histogram[v];
    if (cumulative >= rank) return v;
  }
  return 255;
}

namespace {

int spread(const std::array<std::uint64_t, 256>& h, DrMode mode) {
  if (mode == DrMode::MinMax) {
    int lo = 0, hi = 255;
    while (lo < 256 && h[lo] == 0) ++lo;
    if (lo == 256) return 0;
    while (h[hi] == 0) --hi;
    return hi - lo;
  }
  return histogram_percentile(h, 0.99) - histogram_percentile(h, 0.01);
}

}  // namespace

double dynamic_range(const LumaPlane& luma, DrMode mode) {
  return spread(kernels::fast::histogram256(luma.values), mode);
}

double dynamic_range(const Raster& rgb, DrMode mode) { return dynamic_range(to_luma(rgb), mode); }

double estimate_noise_sigma(const LumaPlane& luma) {
  if (luma.width < 3 || luma.height < 3) return 0.0;
  std::uint64_t sum = kernels::fast::laplacian_abs_sum(luma.values, luma.width, luma.height);
  double interior = static_cast<double>(luma.width - 2) * static_cast<double>(luma.height - 2);
  return std::sqrt(std::numbers::pi / 2.0) * static_cast<double>(sum) / (6.0 * interior);
}

double contrast_to_noise(const LumaPlane& luma, DrMode mode) {
  return dynamic_range(luma, mode) / (estimate_noise_sigma(luma) + kCnrEpsilon);
}

double contrast_to_noise(const Raster& rgb, DrMode mode) { return contrast_to_noise(to_luma(rgb), mode); }

LaplacianProxyScorer LaplacianProxyScorer::from_config(const Config& config) {
  return LaplacianProxyScorer(config.get_double("iqa.nr_midpoint", 100.0), config.get_double("iqa.nr_slope", 0.05));
}

double LaplacianProxyScorer::score_luma(const LumaPlane& luma) const {
  double variance = kernels::fast::laplacian4_moments(luma.values, luma.width, luma.height).variance();
  return 1.0 / (1.0 + std::exp(-slope_ * (variance - midpoint_)));
}

double LaplacianProxyScorer::score(const DecodedImage& image) { return score_luma(to_luma(image.rgb)); }

IqaSettings IqaSettings::from_config(const Config& config) {
  IqaSettings s;
  s.thresholds.dr_min = config.get_double("iqa.dr_min", s.thresholds.dr_min);
  s.thresholds.cnr_min = config.get_double("iqa.cnr_min", s.thresholds.cnr_min);
  s.thresholds.nr_min = config.get_double("iqa.nr_min", s.thresholds.nr_min);
  s.dr_mode = parse_dr_mode(config.get_string("iqa.dr_mode", "percentile"));
  return s;
}

IqaReport assess(const DecodedImage& image, NoReferenceScorer& scorer, const IqaSettings& settings) {
  LumaPlane luma = to_luma(image.rgb);
  IqaReport report;
  report.dynamic_range = dynamic_range(luma, settings.dr_mode);
  report.cnr = report.dynamic_range / (estimate_noise_sigma(luma) + kCnrEpsilon);
  double nr = 0.0;
  try {
    nr = scorer.score(image);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ScorerFailure) throw;
    throw Error(ErrorCode::ScorerFailure, e.what());
  } catch (const std::exception& e) {
    throw Error(ErrorCode::ScorerFailure, e.what());
  }
  if (!std::isfinite(nr) || nr < 0.0 || nr > 1.0) {
    throw Error(ErrorCode::ScorerFailure, "scorer returned a value outside [0,1]");
  }
  report.nr_score = nr;
  report.thresholds_used = settings.thresholds;
  return report;
}

ImageLabel label_image(const IqaReport& report, const IqaThresholds& t) {
  bool good = report.dynamic_range >= t.dr_min && report.cnr >= t.cnr_min && report.nr_score >= t.nr_min;
  return good ? ImageLabel::Good : ImageLabel::Bad;
}

}  // namespace tirtha::ingest
