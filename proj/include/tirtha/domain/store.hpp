#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include <nlohmann/json.hpp>

#include "tirtha/common/clock.hpp"
#include "tirtha/domain/run_state.hpp"
#include "tirtha/domain/types.hpp"

struct sqlite3;

namespace tirtha {

struct PublishInfo {
  std::string artifact_path;
  std::string artifact_digest;
  std::string raw_artifact_path;
  std::string ark;  // full "ark:/NAAN/name"
  nlohmann::json report;
};

struct EnqueueRequest {
  JobKind kind = JobKind::PreprocessImage;
  std::string payload = "{}";
  int max_attempts = 3;
  int priority = 0;
  Timestamp not_before = 0;
};

/// Transactional relational store behind every persisted record.
///
/// Backed by SQLite in WAL mode. Every mutation runs inside a
/// `BEGIN IMMEDIATE` transaction, so writers are serialized both across
/// threads sharing one Store and across processes sharing one database
/// file. The completion/contribution race is closed by a trigger in the
/// schema itself, not by callers.
class Store {
 public:
  /// Opens or creates the database at `path`; ":memory:" gives a private in-memory store.
  explicit Store(const std::filesystem::path& path);
  ~Store();
  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  static constexpr int kMaxVerboseIdSuffix = 1000;

  // --- sites -----------------------------------------------------------
  SiteRecord create_site(const SiteInput& input, const ReconOptions& options, Timestamp now);
  std::optional<SiteRecord> find_site(SiteId id) const;
  SiteRecord get_site(SiteId id) const;
  std::optional<SiteRecord> find_site_by_verbose_id(std::string_view verbose_id) const;
  /// Case-insensitive substring match on verbose_id and name, ordered by (name, id).
  std::vector<SiteRecord> search_sites(std::string_view query) const;
  /// Throws Conflict when the site is already completed.
  SiteRecord complete_site(SiteId id, Timestamp now);
  SiteRecord set_site_status(SiteId id, SiteStatus status, Timestamp now);
  void set_site_options(SiteId id, const ReconOptions& options, Timestamp now);
  void set_site_iqa_overrides(SiteId id, const std::optional<IqaThresholds>& overrides, Timestamp now);

  // --- contributors ----------------------------------------------------
  ContributorRecord upsert_contributor(std::string_view email, std::string_view name);
  std::optional<ContributorRecord> find_contributor(ContributorId id) const;
  std::optional<ContributorRecord> find_contributor_by_email(std::string_view email) const;
  void ban_contributor(ContributorId id, std::string_view reason);

  // --- contributions and images -----------------------------------------
  /// Atomically persists a complete contribution, its PENDING images, and
  /// one preprocessing job per image.
  ContributionRecord record_contribution(SiteId site, ContributorId contributor,
                                         std::span<const ImageBlob> images, Timestamp now);
  /// Incremental upload path: open, attach images, finalize. An upload that
  /// never finalizes leaves PENDING images for the prune task.
  ContributionId open_contribution(SiteId site, ContributorId contributor, Timestamp now);
  ImageId attach_image(ContributionId contribution, const ImageBlob& blob, Timestamp now);
  ContributionRecord finalize_contribution(ContributionId contribution, Timestamp now);
  std::optional<ContributionRecord> find_contribution(ContributionId id) const;
  std::vector<ContributionRecord> contributions_for_site(SiteId site) const;

  std::optional<ImageRecord> find_image(ImageId id) const;
  ImageRecord get_image(ImageId id) const;
  SiteId site_of_image(ImageId id) const;
  void set_image_safety(ImageId id, SafetyState safety);
  /// Records the IQA outcome. GOOD requires safety=SAFE.
  void set_image_assessment(ImageId id, ImageLabel label, const IqaReport& report);
  std::vector<ImageRecord> images_for_site(SiteId site) const;
  std::vector<ImageRecord> moderation_queue() const;
  /// Deletes PENDING images created before `cutoff` whose contribution never
  /// finished uploading; returns their stored paths.
  std::vector<std::string> prune_stale_pending(Timestamp cutoff);

  // --- runs ---------------------------------------------------------------
  /// Creates a QUEUED run. Throws Conflict while another run of the site is non-terminal.
  RunRecord create_run(SiteId site, Timestamp now);
  std::optional<RunRecord> find_run(RunId id) const;
  RunRecord get_run(RunId id) const;
  std::vector<RunRecord> runs_for_site(SiteId site) const;
  std::vector<RunRecord> list_runs() const;
  std::optional<RunRecord> latest_published_run(SiteId site) const;
  /// Runs in QUEUED, PREPROCESSING, RECONSTRUCTING or POSTPROCESSING.
  std::vector<RunRecord> active_runs() const;

  /// Applies `event`; throws IllegalTransition if the machine forbids it.
  /// PUBLISH goes through publish_run instead, since it must carry the ark and artifact.
  RunRecord transition_run(RunId id, RunEvent event, std::string_view message, Timestamp now);
  RunRecord publish_run(RunId id, const PublishInfo& info, Timestamp now);
  void set_run_inputs(RunId id, std::span<const ImageId> images, std::span<const ContributionId> contributions);
  void append_stage_entry(RunId id, const StageLogEntry& entry);
  void merge_run_report(RunId id, const nlohmann::json& patch);
  void relocate_artifact(RunId id, std::string_view new_path);

  /// Takes or renews the execution lease for a run. Returns false while
  /// another holder's lease is still live.
  bool try_acquire_run_lease(RunId id, std::string_view holder, Timestamp now, Timestamp until);
  void release_run_lease(RunId id, std::string_view holder);
  struct RunLease {
    std::optional<std::string> holder;
    Timestamp expires_at = 0;
  };
  RunLease run_lease(RunId id) const;

  // --- arks -----------------------------------------------------------------
  /// Inserts a freshly minted ark; false when the name is already taken.
  bool try_insert_ark(const ArkRecord& ark);
  std::optional<ArkRecord> find_ark(std::string_view naan, std::string_view name) const;
  std::optional<ArkRecord> find_ark_for_run(RunId run) const;
  void attach_ark_to_run(std::string_view naan, std::string_view name, RunId run);
  /// Target is write-once; metadata may be replaced. Throws AlreadyBound / UnknownArk.
  void bind_ark(std::string_view naan, std::string_view name, std::string_view target, std::string_view metadata);
  void update_ark_metadata(std::string_view naan, std::string_view name, std::string_view metadata);
  std::size_t ark_count() const;

  // --- jobs -----------------------------------------------------------------
  /// Enqueues unless a job with the same (kind, payload digest) key exists;
  /// returns the existing or new envelope.
  JobEnvelope enqueue_job(const EnqueueRequest& request, Timestamp now);
  /// Claims the next visible job (FIFO within priority), bumping attempts and
  /// hiding it until now + visibility. Expired claims whose attempts are
  /// exhausted move to the dead-letter set instead of being handed out.
  std::optional<JobEnvelope> claim_job(std::string_view worker, Timestamp now, Timestamp visibility);
  bool ack_job(JobId id, std::string_view worker);
  /// Returns the job to READY after `delay`, or dead-letters it when attempts
  /// are exhausted. `count_attempt=false` refunds the attempt (used for busy requeues).
  bool nack_job(JobId id, std::string_view worker, Timestamp now, Timestamp delay, std::string_view error,
                bool count_attempt = true);
  std::optional<JobEnvelope> find_job(JobId id) const;
  std::optional<JobEnvelope> find_job_by_key(std::string_view idempotency_key) const;
  static std::string idempotency_key(JobKind kind, std::string_view payload);
  std::vector<JobEnvelope> list_jobs() const;
  std::vector<JobEnvelope> dead_letters() const;
  std::size_t queue_depth() const;

  // --- periodic leases --------------------------------------------------------
  /// Fires the named periodic task for `holder` if it is due and no other
  /// holder owns a live lease. Missed ticks coalesce into one firing.
  bool try_fire_periodic(std::string_view name, std::string_view holder, Timestamp now, Timestamp interval);

  // --- requests and maintenance -------------------------------------------------
  std::int64_t insert_request(std::string_view kind, const nlohmann::json& payload,
                              std::optional<ContributorId> contributor, Timestamp now);
  std::vector<ServiceRequest> list_requests() const;
  void log_maintenance(std::string_view task, const nlohmann::json& detail, Timestamp now);
  std::vector<MaintenanceEntry> maintenance_log() const;

  /// Consistent snapshot of every domain table (jobs excluded unless asked).
  nlohmann::json export_json(bool include_jobs = false) const;
  bool healthy() const;

  /// Runs `fn` inside one write transaction; nested Store calls join it.
  template <class F>
  decltype(auto) transaction(F&& fn) {
    WriteTx tx(*this);
    if constexpr (std::is_void_v<decltype(fn())>) {
      fn();
      tx.commit();
    } else {
      decltype(auto) result = fn();
      tx.commit();
      return result;
    }
  }

 private:
  class WriteTx {
   public:
    explicit WriteTx(Store& store);
    ~WriteTx();
    void commit();

   private:
    Store& store_;
    std::unique_lock<std::recursive_mutex> lock_;
    bool outer_ = false;
    bool done_ = false;
  };
  class ReadTx {
   public:
    explicit ReadTx(const Store& store);
    ~ReadTx();

   private:
    const Store& store_;
    std::unique_lock<std::recursive_mutex> lock_;
    bool outer_ = false;
  };

  void migrate();
  JobEnvelope enqueue_locked(const EnqueueRequest& request, Timestamp now);
  ContributionRecord load_contribution(ContributionId id) const;
  RunRecord transition_locked(RunId id, RunState to, RunEvent event, std::string_view message, Timestamp now);
  void write_run_log(RunId id, const std::vector<StageLogEntry>& log);

  sqlite3* db_ = nullptr;
  mutable std::recursive_mutex mutex_;
  mutable int depth_ = 0;
};

}  // namespace tirtha
