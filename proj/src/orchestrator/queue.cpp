#include "tirtha/orchestrator/queue.hpp"

#include <algorithm>

#include "tirtha/common/error.hpp"

namespace tirtha::orchestrator {

QueuePolicy QueuePolicy::from_config(const Config& config) {
  QueuePolicy p;
  // durations in configuration are seconds
  p.visibility_timeout =
      static_cast<Timestamp>(config.get_double("queue.visibility_timeout", p.visibility_timeout / 1000.0) * 1000.0);
  p.max_attempts = static_cast<int>(config.get_int("queue.max_attempts", p.max_attempts));
  if (p.visibility_timeout <= 0) throw Error(ErrorCode::Validation, "queue.visibility_timeout must be positive");
  if (p.max_attempts < 1) throw Error(ErrorCode::Validation, "queue.max_attempts must be at least 1");
  return p;
}

Timestamp backoff_delay(const QueuePolicy& policy, int attempts) {
  Timestamp delay = policy.backoff_base;
  for (int i = 1; i < attempts && delay < policy.backoff_cap; ++i) delay *= 2;
  return std::min(delay, policy.backoff_cap);
}

JobEnvelope JobQueue::enqueue(JobKind kind, const nlohmann::json& payload, int priority) {
  EnqueueRequest req;
  req.kind = kind;
  req.payload = payload.dump();
  req.max_attempts = policy_.max_attempts;
  req.priority = priority;
  return store_.enqueue_job(req, clock_.now());
}

std::optional<JobEnvelope> JobQueue::claim(const std::string& worker) {
  return store_.claim_job(worker, clock_.now(), policy_.visibility_timeout);
}

bool JobQueue::ack(const JobEnvelope& job, const std::string& worker) { return store_.ack_job(job.id, worker); }

bool JobQueue::nack(const JobEnvelope& job, const std::string& worker, const std::string& error) {
  return store_.nack_job(job.id, worker, clock_.now(), backoff_delay(policy_, job.attempts), error);
}

bool JobQueue::requeue(const JobEnvelope& job, const std::string& worker, Timestamp delay, const std::string& reason) {
  return store_.nack_job(job.id, worker, clock_.now(), delay, reason, /*count_attempt=*/false);
}

}  // namespace tirtha::orchestrator
