#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>

#include "tirtha/common/config.hpp"
#include "tirtha/domain/types.hpp"
#include "tirtha/ingest/image.hpp"

namespace tirtha::ingest {

enum class SafetyOutcome { Safe, Unsafe, Inconclusive };
enum class SafetySource { Local, External };

std::string_view to_string(SafetyOutcome);
std::string_view to_string(SafetySource);

struct SafetyVerdict {
  SafetyOutcome outcome = SafetyOutcome::Inconclusive;
  SafetySource source = SafetySource::Local;
  double score = 0.0;
  /// Set when the external client was configured but could not answer.
  bool external_unavailable = false;
};

/// Where an image goes once the safety gate has spoken.
SafetyState route(const SafetyVerdict& verdict);

struct SafetyThresholds {
  double safe_ceiling = 0.3;  // score below: SAFE
  double unsafe_floor = 0.8;  // score above: UNSAFE

  static SafetyThresholds from_config(const Config& config);
};

class LocalSafetyFilter {
 public:
  virtual ~LocalSafetyFilter() = default;
  virtual SafetyVerdict classify(const DecodedImage& image) const = 0;
};

/// Deterministic local filter: a denylist of content hashes, a per-hash score
/// table, and a default score for everything else.
class StubLocalFilter : public LocalSafetyFilter {
 public:
  explicit StubLocalFilter(SafetyThresholds thresholds = {}, double default_score = 0.0)
      : thresholds_(thresholds), default_score_(default_score) {}

  static StubLocalFilter from_config(const Config& config);

  void deny(std::string source_hash) { denylist_.insert(std::move(source_hash)); }
  void set_score(std::string source_hash, double score) { scores_[std::move(source_hash)] = score; }
  void set_default_score(double score) { default_score_ = score; }

  SafetyVerdict classify(const DecodedImage& image) const override;
  SafetyVerdict classify_score(double score) const;

 private:
  SafetyThresholds thresholds_;
  double default_score_;
  std::set<std::string> denylist_;
  std::map<std::string, double> scores_;
};

/// Remote moderation service. Implementations throw
/// Error(EXTERNAL_UNAVAILABLE) on timeout or outage.
class ExternalSafetyClient {
 public:
  virtual ~ExternalSafetyClient() = default;
  virtual SafetyVerdict classify(const DecodedImage& image) = 0;
};

SafetyVerdict classify_safety(const DecodedImage& image, const LocalSafetyFilter& local,
                              ExternalSafetyClient* external);

}  // namespace tirtha::ingest
