#include "tirtha/orchestrator/platform.hpp"

namespace tirtha::orchestrator {

Platform::Platform(Config config, Clock& clock, PlatformParts parts) : config_(std::move(config)), clock_(clock) {
  fs::path root = config_.get_string("storage.root", "tirtha-data");
  fs::path archive = config_.get_string("archive.root", (root / "archive").string());
  fs::create_directories(root);
  std::string db = config_.get_string("storage.db", (root / "tirtha.db").string());

  store_ = std::make_unique<Store>(db);
  blobs_ = std::make_unique<BlobStore>(root, archive);
  queue_ = std::make_unique<JobQueue>(*store_, clock_, QueuePolicy::from_config(config_));
  backend_ = parts.backend ? std::move(parts.backend) : make_backend(config_);
  local_filter_ = parts.local_filter ? std::move(parts.local_filter)
                                     : std::make_unique<ingest::StubLocalFilter>(ingest::StubLocalFilter::from_config(config_));
  external_safety_ = std::move(parts.external_safety);
  scorer_ = parts.scorer ? std::move(parts.scorer)
                         : std::make_unique<ingest::LaplacianProxyScorer>(ingest::LaplacianProxyScorer::from_config(config_));
  preprocessor_ = std::make_unique<Preprocessor>(*store_, *queue_, *local_filter_, external_safety_.get(), *scorer_,
                                                 Preprocessor::settings_from_config(config_));
  executor_ = std::make_unique<RunExecutor>(*store_, *blobs_, *backend_, clock_, ExecutorSettings::from_config(config_));
  maintenance_ = std::make_unique<Maintenance>(*store_, *blobs_, clock_, MaintenanceSettings::from_config(config_));
  scheduler_ = std::make_unique<Scheduler>(*store_, *queue_, clock_);
  for (auto& spec : Scheduler::builtin(config_)) scheduler_->schedule(spec);
}

Worker Platform::make_worker(const std::string& id, bool with_scheduler) {
  return Worker(id, *queue_, *preprocessor_, *executor_, *maintenance_, with_scheduler ? scheduler_.get() : nullptr);
}

}  // namespace tirtha::orchestrator
