#pragma once

#include <atomic>
#include <chrono>
#include <optional>
#include <string>

#include "tirtha/orchestrator/executor.hpp"
#include "tirtha/orchestrator/periodic.hpp"
#include "tirtha/orchestrator/preprocess.hpp"
#include "tirtha/orchestrator/queue.hpp"

namespace tirtha::orchestrator {

enum class JobResult { Idle, Acked, Requeued, Nacked };

/// Claims jobs and dispatches them by kind. Handlers are idempotent, so
/// redelivery after a crash or a lost ack is harmless.
class Worker {
 public:
  Worker(std::string id, JobQueue& queue, Preprocessor& preprocessor, RunExecutor& executor,
         Maintenance& maintenance, Scheduler* scheduler = nullptr)
      : id_(std::move(id)),
        queue_(queue),
        preprocessor_(preprocessor),
        executor_(executor),
        maintenance_(maintenance),
        scheduler_(scheduler) {}

  /// Claims and handles at most one job. When nothing is claimable it ticks
  /// the scheduler and reaps abandoned runs instead.
  JobResult step();
  /// Handles an already claimed job.
  JobResult handle(const JobEnvelope& job);
  /// Steps until the queue has nothing visible; returns the number of jobs handled.
  std::size_t drain(std::size_t limit = 1'000'000);
  void run(const std::atomic<bool>& stop, std::chrono::milliseconds idle_sleep = std::chrono::milliseconds(500));

  const std::string& id() const { return id_; }

  static constexpr Timestamp kBusyRetry = 30 * kSecond;

 private:
  JobResult dispatch(const JobEnvelope& job);

  std::string id_;
  JobQueue& queue_;
  Preprocessor& preprocessor_;
  RunExecutor& executor_;
  Maintenance& maintenance_;
  Scheduler* scheduler_;
};

}  // namespace tirtha::orchestrator
