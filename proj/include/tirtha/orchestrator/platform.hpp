#pragma once

#include <memory>
#include <string>

#include "tirtha/common/clock.hpp"
#include "tirtha/common/config.hpp"
#include "tirtha/domain/store.hpp"
#include "tirtha/ingest/iqa.hpp"
#include "tirtha/ingest/safety.hpp"
#include "tirtha/orchestrator/backend.hpp"
#include "tirtha/orchestrator/executor.hpp"
#include "tirtha/orchestrator/periodic.hpp"
#include "tirtha/orchestrator/preprocess.hpp"
#include "tirtha/orchestrator/queue.hpp"
#include "tirtha/orchestrator/storage.hpp"
#include "tirtha/orchestrator/worker.hpp"

namespace tirtha::orchestrator {

/// Optional replacements for the config-built components.
struct PlatformParts {
  std::unique_ptr<Backend> backend;
  std::unique_ptr<ingest::LocalSafetyFilter> local_filter;
  std::unique_ptr<ingest::ExternalSafetyClient> external_safety;
  std::unique_ptr<ingest::NoReferenceScorer> scorer;
};

/// Everything a process needs, wired from one Config:
///   storage.root (default ./tirtha-data), storage.db (default <root>/tirtha.db),
///   archive.root (default <root>/archive).
class Platform {
 public:
  Platform(Config config, Clock& clock, PlatformParts parts = {});

  const Config& config() const { return config_; }
  Clock& clock() { return clock_; }
  Store& store() { return *store_; }
  BlobStore& blobs() { return *blobs_; }
  JobQueue& queue() { return *queue_; }
  Backend& backend() { return *backend_; }
  Preprocessor& preprocessor() { return *preprocessor_; }
  RunExecutor& executor() { return *executor_; }
  Maintenance& maintenance() { return *maintenance_; }
  Scheduler& scheduler() { return *scheduler_; }

  Worker make_worker(const std::string& id, bool with_scheduler = true);

 private:
  Config config_;
  Clock& clock_;
  std::unique_ptr<Store> store_;
  std::unique_ptr<BlobStore> blobs_;
  std::unique_ptr<JobQueue> queue_;
  std::unique_ptr<Backend> backend_;
  std::unique_ptr<ingest::LocalSafetyFilter> local_filter_;
  std::unique_ptr<ingest::ExternalSafetyClient> external_safety_;
  std::unique_ptr<ingest::NoReferenceScorer> scorer_;
  std::unique_ptr<Preprocessor> preprocessor_;
  std::unique_ptr<RunExecutor> executor_;
  std::unique_ptr<Maintenance> maintenance_;
  std::unique_ptr<Scheduler> scheduler_;
};

}  // namespace tirtha::orchestrator
