#pragma once

#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "tirtha/common/clock.hpp"
#include "tirtha/common/config.hpp"
#include "tirtha/domain/store.hpp"

namespace tirtha::orchestrator {

struct QueuePolicy {
  Timestamp visibility_timeout = 10 * kMinute;
  Timestamp backoff_base = 30 * kSecond;
  Timestamp backoff_cap = 15 * kMinute;
  int max_attempts = 3;

  static QueuePolicy from_config(const Config& config);
};

/// base * 2^(attempts-1), capped.
Timestamp backoff_delay(const QueuePolicy& policy, int attempts);

/// At-least-once job queue over the store's jobs table.
class JobQueue {
 public:
  JobQueue(Store& store, Clock& clock, QueuePolicy policy = {}) : store_(store), clock_(clock), policy_(policy) {}

  /// Payloads are canonicalized by serialization, so equal documents dedupe.
  JobEnvelope enqueue(JobKind kind, const nlohmann::json& payload, int priority = 0);
  std::optional<JobEnvelope> claim(const std::string& worker);
  bool ack(const JobEnvelope& job, const std::string& worker);
  /// Retry after exponential backoff; dead-letters once attempts are exhausted.
  bool nack(const JobEnvelope& job, const std::string& worker, const std::string& error);
  /// Puts the job back without spending an attempt.
  bool requeue(const JobEnvelope& job, const std::string& worker, Timestamp delay, const std::string& reason);

  const QueuePolicy& policy() const { return policy_; }
  Store& store() { return store_; }
  Clock& clock() { return clock_; }

 private:
  Store& store_;
  Clock& clock_;
  QueuePolicy policy_;
};

}  // namespace tirtha::orchestrator
