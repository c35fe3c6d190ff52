#include "tirtha/ingest/safety.hpp"

#include <algorithm>

#include "tirtha/common/error.hpp"

namespace tirtha::ingest {

std::string_view to_string(SafetyOutcome o) {
  switch (o) {
    case SafetyOutcome::Safe: return "SAFE";
    case SafetyOutcome::Unsafe: return "UNSAFE";
    case SafetyOutcome::Inconclusive: return "INCONCLUSIVE";
  }
  return "?";
}

std::string_view to_string(SafetySource s) { return s == SafetySource::Local ? "LOCAL" : "EXTERNAL"; }

SafetyState route(const SafetyVerdict& verdict) {
  switch (verdict.outcome) {
    case SafetyOutcome::Safe: return SafetyState::Safe;
    case SafetyOutcome::Unsafe: return SafetyState::Unsafe;
    case SafetyOutcome::Inconclusive: return SafetyState::Moderation;
  }
  return SafetyState::Moderation;
}

SafetyThresholds SafetyThresholds::from_config(const Config& config) {
  SafetyThresholds t;
  t.safe_ceiling = config.get_double("safety.safe_ceiling", t.safe_ceiling);
  t.unsafe_floor = config.get_double("safety.unsafe_floor", t.unsafe_floor);
  if (!(t.safe_ceiling >= 0 && t.safe_ceiling <= t.unsafe_floor && t.unsafe_floor <= 1)) {
    throw Error(ErrorCode::Validation, "safety thresholds must satisfy 0 <= safe_ceiling <= unsafe_floor <= 1");
  }
  return t;
}

StubLocalFilter StubLocalFilter::from_config(const Config& config) {
  StubLocalFilter filter(SafetyThresholds::from_config(config), config.get_double("safety.default_score", 0.0));
  for (const auto& hash : config.get_string_list("safety.denylist")) filter.deny(hash);
  for (const auto& [hash, score] : config.subtree("safety.scores")) filter.set_score(hash, score.get<double>());
  return filter;
}

SafetyVerdict StubLocalFilter::classify_score(double score) const {
  SafetyVerdict v;
  v.source = SafetySource::Local;
  v.score = std::clamp(score, 0.0, 1.0);
  if (v.score < thresholds_.safe_ceiling) v.outcome = SafetyOutcome::Safe;
  else if (v.score > thresholds_.unsafe_floor) v.outcome = SafetyOutcome::Unsafe;
  else v.outcome = SafetyOutcome::Inconclusive;
  return v;
}

SafetyVerdict StubLocalFilter::classify(const DecodedImage& image) const {
  if (denylist_.count(image.source_hash)) return classify_score(1.0);
  auto it = scores_.find(image.source_hash);
  return classify_score(it != scores_.end() ? it->second : default_score_);
}

SafetyVerdict classify_safety(const DecodedImage& image, const LocalSafetyFilter& local,
                              ExternalSafetyClient* external) {
  SafetyVerdict verdict = local.classify(image);
  if (verdict.outcome != SafetyOutcome::Inconclusive || external == nullptr) return verdict;
  try {
    SafetyVerdict remote = external->classify(image);
    remote.source = SafetySource::External;
    return remote;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ExternalUnavailable && e.code() != ErrorCode::Timeout) throw;
    verdict.external_unavailable = true;
    return verdict;
  }
}

}  // namespace tirtha::ingest
