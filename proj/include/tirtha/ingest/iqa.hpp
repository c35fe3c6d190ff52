#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "tirtha/common/config.hpp"
#include "tirtha/domain/types.hpp"
#include "tirtha/ingest/image.hpp"

namespace tirtha::ingest {

enum class DrMode { Percentile, MinMax };

DrMode parse_dr_mode(std::string_view text);

/// 8-bit BT.601 luma plane.
struct LumaPlane {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> values;
};

LumaPlane to_luma(const Raster& rgb);

/// Nearest-rank percentile over a 256-bin histogram: smallest value v with
/// cumulative count >= ceil(p * N). p in (0, 1].
int histogram_percentile(const std::array<std::uint64_t, 256>& histogram, double p);

double dynamic_range(const LumaPlane& luma, DrMode mode = DrMode::Percentile);
double dynamic_range(const Raster& rgb, DrMode mode = DrMode::Percentile);

/// Immerkaer's fast noise estimate: sqrt(pi/2) * sum|L*I| / (6 (W-2)(H-2)).
/// Zero for planes smaller than 3x3.
double estimate_noise_sigma(const LumaPlane& luma);

constexpr double kCnrEpsilon = 1e-6;

double contrast_to_noise(const LumaPlane& luma, DrMode mode = DrMode::Percentile);
double contrast_to_noise(const Raster& rgb, DrMode mode = DrMode::Percentile);

/// Pluggable no-reference quality model. Implementations throw
/// Error(SCORER_FAILURE) when they cannot produce a score.
class NoReferenceScorer {
 public:
  virtual ~NoReferenceScorer() = default;
  virtual double score(const DecodedImage& image) = 0;
};

/// logistic(slope * (var(4-neighbour Laplacian of luma) - midpoint)).
class LaplacianProxyScorer : public NoReferenceScorer {
 public:
  explicit LaplacianProxyScorer(double midpoint = 100.0, double slope = 0.05) : midpoint_(midpoint), slope_(slope) {}
  static LaplacianProxyScorer from_config(const Config& config);

  double score(const DecodedImage& image) override;
  double score_luma(const LumaPlane& luma) const;

 private:
  double midpoint_;
  double slope_;
};

struct IqaSettings {
  IqaThresholds thresholds;
  DrMode dr_mode = DrMode::Percentile;

  static IqaSettings from_config(const Config& config);
};

/// Runs all three metrics. Scorer failures propagate as SCORER_FAILURE.
IqaReport assess(const DecodedImage& image, NoReferenceScorer& scorer, const IqaSettings& settings);

/// GOOD iff every metric meets its threshold.
ImageLabel label_image(const IqaReport& report, const IqaThresholds& thresholds);

}  // namespace tirtha::ingest
