#include "tirtha/orchestrator/periodic.hpp"

#include <map>

#include "tirtha/common/error.hpp"
#include "tirtha/common/io.hpp"

namespace tirtha::orchestrator {

MaintenanceSettings MaintenanceSettings::from_config(const Config& config) {
  MaintenanceSettings s;
  s.prune_age = config.get_int("maintenance.prune_days", 7) * kDay;
  s.archive_age = config.get_int("maintenance.archive_days", 365) * kDay;
  s.archive_keep_latest = config.get_bool("maintenance.archive_keep_latest", false);
  s.backup_path = config.get_string("maintenance.backup_path", "");
  return s;
}

nlohmann::json Maintenance::prune() {
  Timestamp now = clock_.now();
  std::vector<std::string> paths = store_.prune_stale_pending(now - settings_.prune_age);
  std::size_t removed_files = 0;
  for (const auto& p : paths) {
    std::error_code ec;
    if (std::filesystem::remove(p, ec)) ++removed_files;
  }
  nlohmann::json detail = {{"deleted_images", paths.size()}, {"deleted_files", removed_files}};
  store_.log_maintenance("prune", detail, now);
  return detail;
}

nlohmann::json Maintenance::archive() {
  Timestamp now = clock_.now();
  Timestamp cutoff = now - settings_.archive_age;
  std::map<std::int64_t, std::int64_t> latest;  // site -> latest published run
  if (settings_.archive_keep_latest) {
    for (const auto& run : store_.list_runs()) {
      if (run.state != RunState::Published) continue;
      if (auto r = store_.latest_published_run(run.site_id)) latest[run.site_id.value] = r->id.value;
    }
  }
  nlohmann::json archived = nlohmann::json::array();
  for (const auto& run : store_.list_runs()) {
    if (run.state != RunState::Published || !run.ended_at || *run.ended_at >= cutoff) continue;
    if (settings_.archive_keep_latest && latest[run.site_id.value] == run.id.value) continue;
    std::string new_path;
    if (run.artifact_path) {
      std::filesystem::path from = *run.artifact_path;
      std::filesystem::path to = blobs_.archived_path(from);
      if (std::filesystem::exists(from)) {
        std::filesystem::create_directories(to.parent_path());
        std::filesystem::rename(from, to);
      }
      new_path = to.string();
    }
    store_.transaction([&] {
      store_.transition_run(run.id, RunEvent::Archive, "archived by maintenance", now);
      if (!new_path.empty()) store_.relocate_artifact(run.id, new_path);
    });
    archived.push_back({{"run_id", run.id.value}, {"artifact_path", new_path}});
  }
  nlohmann::json detail = {{"archived", archived}, {"cutoff", cutoff}};
  store_.log_maintenance("archive", detail, now);
  return detail;
}

nlohmann::json Maintenance::backup() {
  Timestamp now = clock_.now();
  std::filesystem::path path = settings_.backup_path;
  if (path.empty()) path = blobs_.root() / "backup" / "store.json";
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  nlohmann::json snapshot = store_.export_json(true);
  write_file_atomic(path, std::string_view(snapshot.dump()));
  nlohmann::json detail = {{"path", path.string()}};
  store_.log_maintenance("backup", detail, now);
  return detail;
}

nlohmann::json Maintenance::run(const std::string& task) {
  if (task == "prune") return prune();
  if (task == "archive") return archive();
  if (task == "backup") return backup();
  throw Error(ErrorCode::Validation, "unknown maintenance task '" + task + "'");
}

void Scheduler::schedule(PeriodicSpec spec) {
  if (spec.interval < kMinute) throw Error(ErrorCode::Validation, "periodic interval must be at least one minute");
  for (const auto& s : specs_) {
    if (s.name == spec.name) throw Error(ErrorCode::Validation, "periodic task '" + spec.name + "' already scheduled");
  }
  specs_.push_back(std::move(spec));
}

std::vector<std::string> Scheduler::tick(const std::string& holder) {
  std::vector<std::string> fired;
  for (const auto& spec : specs_) {
    Timestamp now = clock_.now();
    bool due = store_.transaction([&] {
      if (!store_.try_fire_periodic(spec.name, holder, now, spec.interval)) return false;
      queue_.enqueue(JobKind::Periodic, {{"task", spec.name}, {"fired_at", now}});
      return true;
    });
    if (due) fired.push_back(spec.name);
  }
  return fired;
}

std::vector<PeriodicSpec> Scheduler::builtin(const Config& config) {
  std::vector<PeriodicSpec> out;
  for (const char* task : {"prune", "archive", "backup"}) {
    Timestamp interval = config.get_int(std::string("maintenance.") + task + "_interval", kDay / kSecond) * kSecond;
    out.push_back({task, interval});
  }
  return out;
}

}  // namespace tirtha::orchestrator
