#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "tirtha/common/config.hpp"
#include "tirtha/common/error.hpp"
#include "tirtha/ingest/exif.hpp"
#include "tirtha/ingest/iqa.hpp"
#include "tirtha/ingest/jpeg.hpp"
#include "tirtha/ingest/safety.hpp"

using namespace tirtha;
using namespace tirtha::ingest;

namespace {

ErrorCode decode_error(const std::vector<std::uint8_t>& bytes, int floor = 1080) {
  try {
    decode_and_validate(bytes, {floor});
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "decode succeeded";
  return ErrorCode::Integrity;
}

double oracle_cnr(const Raster& r) {
  auto luma = fixture::luma_of(r);
  return oracle::dynamic_range(luma) / (oracle::immerkaer_sigma(luma, r.width, r.height) + 1e-6);
}

class FixedScorer : public NoReferenceScorer {
 public:
  explicit FixedScorer(double s) : s_(s) {}
  double score(const DecodedImage&) override { return s_; }

 private:
  double s_;
};

class ScriptedExternal : public ExternalSafetyClient {
 public:
  explicit ScriptedExternal(std::optional<SafetyOutcome> outcome) : outcome_(outcome) {}
  SafetyVerdict classify(const DecodedImage&) override {
    ++calls;
    if (!outcome_) throw Error(ErrorCode::ExternalUnavailable, "timeout");
    return {*outcome_, SafetySource::External, *outcome_ == SafetyOutcome::Safe ? 0.1 : 0.9, false};
  }
  int calls = 0;

 private:
  std::optional<SafetyOutcome> outcome_;
};

DecodedImage decoded(const Raster& r) {
  DecodedImage d;
  d.rgb = r;
  d.source_hash = "h";
  return d;
}

}  // namespace

TEST(Decode, LargeJpegWithExif) {
  ExifFields f;
  f.make = "FieldCam";
  f.model = "FC-1";
  f.date_time = "2023:01:14 09:30:00";
  f.orientation = 1;
  EncodeOptions opts;
  opts.app1 = build_exif_payload(f);
  auto bytes = encode_jpeg(fixture::gray(4000, 3000, 128), opts);
  DecodedImage img = decode_and_validate(bytes);
  EXPECT_EQ(img.width(), 4000);
  EXPECT_EQ(img.height(), 3000);
  ASSERT_TRUE(img.exif.has_value());
  EXPECT_EQ(img.exif->make, "FieldCam");
  EXPECT_EQ(img.exif->orientation, 1);
  EXPECT_EQ(img.source_hash.size(), 64u);
}

TEST(Decode, RejectsPng) { EXPECT_EQ(decode_error(fixture::png_signature_bytes()), ErrorCode::UnsupportedFormat); }

TEST(Decode, RejectsEmpty) { EXPECT_EQ(decode_error({}), ErrorCode::UnsupportedFormat); }

TEST(Decode, TooSmallUnderDefaultFloor) {
  auto bytes = encode_jpeg(fixture::gray(640, 480, 100));
  EXPECT_EQ(DecodeOptions{}.min_short_side, 1080);
  EXPECT_EQ(decode_error(bytes), ErrorCode::TooSmall);
  EXPECT_EQ(decode_and_validate(bytes, {480}).height(), 480);
  // the floor comes from configuration
  Config cfg = Config::from_json(nlohmann::json::parse(R"({"ingest": {"min_short_side": 2000}})"));
  EXPECT_EQ(cfg.get_int("ingest.min_short_side", 1080), 2000);
}

TEST(Decode, TruncatedIsCorrupt) {
  auto bytes = fixture::photo_jpeg(fixture::PhotoKind::Clean, 256, 192, 3);
  bytes.resize(bytes.size() / 2);
  EXPECT_EQ(decode_error(bytes, 64), ErrorCode::Corrupt);
  std::vector<std::uint8_t> soi_only = {0xFF, 0xD8};
  EXPECT_EQ(decode_error(soi_only, 64), ErrorCode::Corrupt);
}

TEST(Decode, ProbeReadsDimensionsWithoutScan) {
  auto bytes = fixture::photo_jpeg(fixture::PhotoKind::Clean, 320, 200, 4);
  JpegInfo info = probe_jpeg(bytes);
  EXPECT_EQ(info.width, 320);
  EXPECT_EQ(info.height, 200);
  EXPECT_EQ(info.components, 3);
  EXPECT_TRUE(info.exif.has_value());
}

TEST(Exif, BigAndLittleEndianParse) {
  ExifFields f;
  f.make = "Maker";
  f.orientation = 6;
  auto payload = build_exif_payload(f);
  auto le = parse_exif(payload);
  ASSERT_TRUE(le);
  EXPECT_FALSE(le->big_endian);
  EXPECT_EQ(le->make, "Maker");
  EXPECT_EQ(le->orientation, 6);

  // hand-built big-endian block: one SHORT orientation entry
  std::vector<std::uint8_t> be = {'E', 'x', 'i', 'f', 0, 0, 'M', 'M', 0, 42, 0, 0, 0, 8,
                                  0, 1, 0x01, 0x12, 0, 3, 0, 0, 0, 1, 0, 3, 0, 0, 0, 0, 0, 0};
  auto parsed = parse_exif(be);
  ASSERT_TRUE(parsed);
  EXPECT_TRUE(parsed->big_endian);
  EXPECT_EQ(parsed->orientation, 3);

  std::vector<std::uint8_t> bad = {'E', 'x', 'i', 'f', 0, 0, 'X', 'X', 0, 42};
  EXPECT_FALSE(parse_exif(bad));
}

TEST(DynamicRange, ConstantIsZero) { EXPECT_EQ(dynamic_range(fixture::gray(64, 64, 128)), 0.0); }

TEST(DynamicRange, HalfBlackHalfWhite) { EXPECT_EQ(dynamic_range(fixture::two_tone(64, 64, 0, 255, 0, 1)), 255.0); }

TEST(DynamicRange, UniformRampMatchesNearestRankOracle) {
  Raster ramp = fixture::ramp256();
  auto luma = fixture::luma_of(ramp);
  int expected = oracle::dynamic_range(luma);
  // ceil(0.01 * 65536) = 656 -> value 2; ceil(0.99 * 65536) = 64881 -> value 253
  EXPECT_EQ(oracle::nearest_rank(luma, 0.01), 2);
  EXPECT_EQ(oracle::nearest_rank(luma, 0.99), 253);
  EXPECT_EQ(expected, 251);
  EXPECT_EQ(dynamic_range(ramp), expected);
}

TEST(DynamicRange, MinMaxMode) {
  Raster r = fixture::gray(32, 32, 100);
  r.at(0, 0)[0] = r.at(0, 0)[1] = r.at(0, 0)[2] = 0;
  EXPECT_EQ(dynamic_range(r, DrMode::MinMax), 100.0);
  EXPECT_EQ(dynamic_range(r, DrMode::Percentile), 0.0);
  EXPECT_EQ(parse_dr_mode("minmax"), DrMode::MinMax);
  EXPECT_THROW(parse_dr_mode("max"), Error);
}

TEST(DynamicRange, PercentileMatchesOracleOnRandomRasters) {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    Raster r = fixture::random_raster(37, 29, seed);
    auto luma = fixture::luma_of(r);
    EXPECT_EQ(dynamic_range(r), oracle::dynamic_range(luma)) << seed;
  }
}

TEST(DynamicRange, PermutationInvariant) {
  std::mt19937_64 rng(11);
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    Raster r = fixture::random_raster(24, 18, seed);
    Raster shuffled = r;
    std::vector<std::size_t> idx(r.pixel_count());
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t i = 0; i < idx.size(); ++i)
      std::copy_n(r.pixels.data() + idx[i] * 3, 3, shuffled.pixels.data() + i * 3);
    EXPECT_EQ(dynamic_range(shuffled), dynamic_range(r));
  }
}

namespace {

Raster as_gray(const Raster& r) {
  Raster g = r;
  auto luma = fixture::luma_of(r);
  for (std::size_t i = 0; i < luma.size(); ++i) std::fill_n(g.pixels.data() + i * 3, 3, luma[i]);
  return g;
}

Raster stretch(const Raster& r, double alpha) {
  Raster s = r;
  for (auto& v : s.pixels) v = static_cast<std::uint8_t>(std::clamp(std::lround(128.0 + alpha * (v - 128.0)), 0L, 255L));
  return s;
}

}  // namespace

TEST(DynamicRange, StretchAroundMidGrayNeverShrinksAStraddlingRange) {
  std::mt19937_64 rng(12);
  int straddling = 0;
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    Raster g = as_gray(fixture::random_raster(24, 18, seed));
    auto luma = fixture::luma_of(g);
    int p1 = oracle::nearest_rank(luma, 0.01), p99 = oracle::nearest_rank(luma, 0.99);
    double alpha = std::uniform_real_distribution<double>(1.01, 3.0)(rng);
    double dr = dynamic_range(g), dr_stretched = dynamic_range(stretch(g, alpha));
    if (p1 <= 128 && p99 >= 128) {
      ++straddling;
      EXPECT_GE(dr_stretched, dr) << seed;
    }
  }
  EXPECT_GT(straddling, 40);
}

TEST(DynamicRange, ClampingCanCompressAOneSidedRange) {
  // Every value above mid-gray: a strong stretch pins both percentiles at 255.
  Raster g = fixture::two_tone(40, 40, 240, 250, 0.0, 1);
  EXPECT_EQ(dynamic_range(g), 10.0);
  EXPECT_EQ(dynamic_range(stretch(g, 3.0)), 0.0);
}

TEST(Noise, ImmerkaerMatchesOracle) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Raster r = fixture::random_raster(41, 33, seed);
    LumaPlane l = to_luma(r);
    EXPECT_NEAR(estimate_noise_sigma(l), oracle::immerkaer_sigma(l.values, l.width, l.height), 1e-9);
  }
  EXPECT_EQ(estimate_noise_sigma(to_luma(fixture::gray(2, 9, 4))), 0.0);
}

TEST(Noise, RecoversSigmaOnUnclippedTwoTone) {
  Raster r = fixture::two_tone(256, 256, 64, 192, 5.0, 21);
  double sigma = estimate_noise_sigma(to_luma(r));
  EXPECT_NEAR(sigma, 5.0, 0.5);
}

TEST(Cnr, ConstantIsZero) { EXPECT_EQ(contrast_to_noise(fixture::gray(64, 64, 77)), 0.0); }

TEST(Cnr, NoisyTwoToneMatchesMonteCarloOracle) {
  // The oracle regenerates the noisy image and runs an independent estimator.
  // 0/255 with sigma 5 clips half of the noise, so the estimate sits near 90.
  double total = 0;
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    Raster r = fixture::two_tone(256, 256, 0, 255, 5.0, seed);
    double cnr = contrast_to_noise(r);
    double expected = oracle_cnr(r);
    EXPECT_NEAR(cnr, expected, expected * 1e-9);
    total += cnr;
  }
  double mean = total / 8;
  EXPECT_GT(mean, 80.0);
  EXPECT_LT(mean, 100.0);
}

TEST(Cnr, NoiselessTwoToneIsEpsilonBounded) {
  Raster r = fixture::two_tone(128, 128, 0, 255, 0.0, 1);
  double cnr = contrast_to_noise(r);
  EXPECT_GE(cnr, 1e4);
  EXPECT_NEAR(cnr, oracle_cnr(r), 1.0);
}

TEST(NoReference, ProxyExamples) {
  LaplacianProxyScorer proxy;
  EXPECT_LT(proxy.score_luma(to_luma(fixture::gray(64, 64, 128))), 0.1);
  EXPECT_GT(proxy.score_luma(to_luma(fixture::checkerboard(64, 64))), 0.9);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Raster r = fixture::random_raster(30, 30, seed);
    LumaPlane l = to_luma(r);
    double var = oracle::laplacian4_variance(l.values, l.width, l.height);
    double expected = 1.0 / (1.0 + std::exp(-0.05 * (var - 100.0)));
    double got = proxy.score_luma(l);
    EXPECT_NEAR(got, expected, 1e-9);
    EXPECT_GE(got, 0.0);
    EXPECT_LE(got, 1.0);
  }
}

TEST(NoReference, ProxyConfig) {
  Config cfg = Config::from_json(nlohmann::json::parse(R"({"iqa": {"nr_midpoint": 10, "nr_slope": 1}})"));
  LaplacianProxyScorer proxy = LaplacianProxyScorer::from_config(cfg);
  EXPECT_NEAR(proxy.score_luma(to_luma(fixture::gray(16, 16, 9))), 1.0 / (1.0 + std::exp(10.0)), 1e-12);
}

TEST(Label, Examples) {
  IqaThresholds t;
  EXPECT_EQ(t.dr_min, 100.0);
  EXPECT_EQ(t.cnr_min, 17.5);
  EXPECT_EQ(t.nr_min, 0.6);
  EXPECT_EQ(label_image({120, 20, 0.7, t}, t), ImageLabel::Good);
  EXPECT_EQ(label_image({99, 20, 0.7, t}, t), ImageLabel::Bad);
  EXPECT_EQ(label_image({0, 0, 0, t}, t), ImageLabel::Bad);
  EXPECT_EQ(label_image({100, 17.5, 0.6, t}, t), ImageLabel::Good);
}

TEST(Label, MonotoneInEachMetric) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> dr(0, 255), cnr(0, 40), nr(0, 1), bump(0, 50);
  IqaThresholds t;
  for (int i = 0; i < 2000; ++i) {
    IqaReport r{dr(rng), cnr(rng), nr(rng), t};
    if (label_image(r, t) != ImageLabel::Good) continue;
    IqaReport up = r;
    switch (i % 3) {
      case 0: up.dynamic_range += bump(rng); break;
      case 1: up.cnr += bump(rng); break;
      default: up.nr_score = std::min(1.0, up.nr_score + bump(rng) / 50); break;
    }
    EXPECT_EQ(label_image(up, t), ImageLabel::Good);
  }
}

TEST(Assess, DeterministicAndUsesSettings) {
  auto bytes = fixture::photo_jpeg(fixture::PhotoKind::Clean, 320, 240, 9);
  LaplacianProxyScorer proxy;
  IqaSettings settings;
  IqaReport a = assess(decode_and_validate(bytes, {64}), proxy, settings);
  IqaReport b = assess(decode_and_validate(bytes, {64}), proxy, settings);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.thresholds_used, settings.thresholds);
  Config cfg = Config::from_json(nlohmann::json::parse(R"({"iqa": {"dr_min": 150, "cnr_min": 5, "nr_min": 0.2}})"));
  IqaSettings custom = IqaSettings::from_config(cfg);
  EXPECT_EQ(custom.thresholds.dr_min, 150.0);
  EXPECT_EQ(assess(decode_and_validate(bytes, {64}), proxy, custom).thresholds_used.dr_min, 150.0);
}

TEST(Assess, PhotoKindsLabelAsIntended) {
  LaplacianProxyScorer proxy;
  IqaSettings settings;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto good = assess(decode_and_validate(fixture::photo_jpeg(fixture::PhotoKind::Clean, 480, 360, seed), {64}),
                       proxy, settings);
    EXPECT_EQ(label_image(good, settings.thresholds), ImageLabel::Good)
        << good.dynamic_range << " " << good.cnr << " " << good.nr_score;
    auto low = assess(decode_and_validate(fixture::photo_jpeg(fixture::PhotoKind::LowDr, 480, 360, seed), {64}),
                      proxy, settings);
    EXPECT_LT(low.dynamic_range, 100.0);
    auto noisy = assess(decode_and_validate(fixture::photo_jpeg(fixture::PhotoKind::Noisy, 480, 360, seed), {64}),
                        proxy, settings);
    EXPECT_LT(noisy.cnr, 17.5);
  }
}

TEST(Assess, ScorerFailurePropagates) {
  class Broken : public NoReferenceScorer {
   public:
    double score(const DecodedImage&) override { throw Error(ErrorCode::ScorerFailure, "model offline"); }
  } broken;
  try {
    assess(decoded(fixture::checkerboard(16, 16)), broken, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ScorerFailure);
  }
  FixedScorer fixed(0.9);
  EXPECT_EQ(assess(decoded(fixture::checkerboard(16, 16)), fixed, {}).nr_score, 0.9);
}

TEST(Safety, LocalThresholdExamples) {
  StubLocalFilter local;
  auto safe = local.classify_score(0.02);
  EXPECT_EQ(safe.outcome, SafetyOutcome::Safe);
  EXPECT_EQ(safe.source, SafetySource::Local);
  EXPECT_EQ(route(safe), SafetyState::Safe);
  auto unsafe = local.classify_score(0.95);
  EXPECT_EQ(unsafe.outcome, SafetyOutcome::Unsafe);
  EXPECT_EQ(route(unsafe), SafetyState::Unsafe);
  auto unsure = local.classify_score(0.5);
  EXPECT_EQ(unsure.outcome, SafetyOutcome::Inconclusive);
  EXPECT_EQ(route(unsure), SafetyState::Moderation);
}

TEST(Safety, InconclusiveWithoutExternalGoesToModeration) {
  StubLocalFilter local({}, 0.5);
  auto v = classify_safety(decoded(fixture::gray(8, 8, 1)), local, nullptr);
  EXPECT_EQ(v.outcome, SafetyOutcome::Inconclusive);
  EXPECT_EQ(route(v), SafetyState::Moderation);
}

TEST(Safety, ExternalConsultedOnlyWhenInconclusive) {
  StubLocalFilter local({}, 0.5);
  ScriptedExternal ext(SafetyOutcome::Safe);
  auto v = classify_safety(decoded(fixture::gray(8, 8, 1)), local, &ext);
  EXPECT_EQ(v.outcome, SafetyOutcome::Safe);
  EXPECT_EQ(v.source, SafetySource::External);
  EXPECT_EQ(ext.calls, 1);
  local.set_default_score(0.01);
  classify_safety(decoded(fixture::gray(8, 8, 1)), local, &ext);
  EXPECT_EQ(ext.calls, 1);
}

TEST(Safety, ExternalOutageDegradesToModeration) {
  StubLocalFilter local({}, 0.5);
  ScriptedExternal down(std::nullopt);
  auto v = classify_safety(decoded(fixture::gray(8, 8, 1)), local, &down);
  EXPECT_TRUE(v.external_unavailable);
  EXPECT_EQ(route(v), SafetyState::Moderation);
}

TEST(Safety, DenylistAndScoreTable) {
  StubLocalFilter local;
  DecodedImage img = decoded(fixture::gray(8, 8, 1));
  img.source_hash = "abc";
  local.deny("abc");
  EXPECT_EQ(local.classify(img).outcome, SafetyOutcome::Unsafe);
  img.source_hash = "def";
  local.set_score("def", 0.6);
  EXPECT_EQ(local.classify(img).outcome, SafetyOutcome::Inconclusive);
  Config cfg = Config::from_json(nlohmann::json::parse(R"({"safety": {"safe_ceiling": 0.7, "unsafe_floor": 0.9}})"));
  StubLocalFilter tuned = StubLocalFilter::from_config(cfg);
  EXPECT_EQ(tuned.classify_score(0.6).outcome, SafetyOutcome::Safe);
}
