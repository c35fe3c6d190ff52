#include "tirtha/orchestrator/worker.hpp"

#include <thread>

#include "tirtha/common/error.hpp"

namespace tirtha::orchestrator {

JobResult Worker::step() {
  std::optional<JobEnvelope> job = queue_.claim(id_);
  if (!job) {
    if (scheduler_) scheduler_->tick(id_);
    executor_.reap_abandoned();
    return JobResult::Idle;
  }
  return handle(*job);
}

JobResult Worker::handle(const JobEnvelope& job) {
  try {
    return dispatch(job);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::RunBusy) {
      queue_.requeue(job, id_, kBusyRetry, e.what());
      return JobResult::Requeued;
    }
    queue_.nack(job, id_, std::string(to_string(e.code())) + ": " + e.what());
    return JobResult::Nacked;
  } catch (const std::exception& e) {
    queue_.nack(job, id_, e.what());
    return JobResult::Nacked;
  }
}

JobResult Worker::dispatch(const JobEnvelope& job) {
  nlohmann::json payload = nlohmann::json::parse(job.payload);
  switch (job.kind) {
    case JobKind::PreprocessImage:
      preprocessor_.handle(payload);
      break;
    case JobKind::ExecuteRun: {
      RunId run(payload.at("run_id").get<std::int64_t>());
      bool final_attempt = job.attempts >= job.max_attempts;
      try {
        executor_.execute(run, id_, final_attempt);
      } catch (const Error& e) {
        if (!final_attempt || e.code() == ErrorCode::RunBusy) throw;
        if (!is_terminal(queue_.store().get_run(run).state)) executor_.fail(run, e.what());
      } catch (const std::exception& e) {
        if (!final_attempt) throw;
        if (!is_terminal(queue_.store().get_run(run).state)) executor_.fail(run, e.what());
      }
      break;
    }
    case JobKind::Periodic:
      maintenance_.run(payload.at("task").get<std::string>());
      break;
  }
  queue_.ack(job, id_);
  return JobResult::Acked;
}

std::size_t Worker::drain(std::size_t limit) {
  std::size_t handled = 0;
  while (handled < limit) {
    std::optional<JobEnvelope> job = queue_.claim(id_);
    if (!job) break;
    handle(*job);
    ++handled;
  }
  executor_.reap_abandoned();
  return handled;
}

void Worker::run(const std::atomic<bool>& stop, std::chrono::milliseconds idle_sleep) {
  while (!stop.load()) {
    JobResult r = step();
    if (r == JobResult::Idle) {
      // sleep in small slices so shutdown stays responsive
      auto until = std::chrono::steady_clock::now() + idle_sleep;
      while (!stop.load() && std::chrono::steady_clock::now() < until) {
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
      }
    }
  }
}

}  // namespace tirtha::orchestrator
