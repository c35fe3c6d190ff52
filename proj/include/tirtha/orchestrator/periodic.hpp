#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tirtha/common/clock.hpp"
#include "tirtha/common/config.hpp"
#include "tirtha/domain/store.hpp"
#include "tirtha/orchestrator/queue.hpp"
#include "tirtha/orchestrator/storage.hpp"

namespace tirtha::orchestrator {

struct MaintenanceSettings {
  Timestamp prune_age = 7 * kDay;
  Timestamp archive_age = 365 * kDay;
  bool archive_keep_latest = false;
  std::filesystem::path backup_path;  // empty: <storage root>/backup/store.json

  static MaintenanceSettings from_config(const Config& config);
};

/// Built-in maintenance tasks. Each returns the detail it logged.
class Maintenance {
 public:
  Maintenance(Store& store, BlobStore& blobs, Clock& clock, MaintenanceSettings settings)
      : store_(store), blobs_(blobs), clock_(clock), settings_(std::move(settings)) {}

  nlohmann::json prune();
  nlohmann::json archive();
  nlohmann::json backup();
  /// Dispatches on "prune", "archive" or "backup".
  nlohmann::json run(const std::string& task);

  const MaintenanceSettings& settings() const { return settings_; }

 private:
  Store& store_;
  BlobStore& blobs_;
  Clock& clock_;
  MaintenanceSettings settings_;
};

struct PeriodicSpec {
  std::string name;
  Timestamp interval = kDay;
};

/// Fires periodic tasks under a store-backed lease so that, across any
/// number of schedulers sharing a store, each due tick runs once. A fired
/// tick becomes a PERIODIC job carrying the task name.
class Scheduler {
 public:
  Scheduler(Store& store, JobQueue& queue, Clock& clock) : store_(store), queue_(queue), clock_(clock) {}

  /// Throws VALIDATION for intervals under one minute or duplicate names.
  void schedule(PeriodicSpec spec);
  /// Returns the names that fired on this tick.
  std::vector<std::string> tick(const std::string& holder);

  const std::vector<PeriodicSpec>& specs() const { return specs_; }

  /// prune/archive/backup with intervals from maintenance.<task>_interval (seconds; default one day).
  static std::vector<PeriodicSpec> builtin(const Config& config);

 private:
  Store& store_;
  JobQueue& queue_;
  Clock& clock_;
  std::vector<PeriodicSpec> specs_;
};

}  // namespace tirtha::orchestrator
