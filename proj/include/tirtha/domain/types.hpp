#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "tirtha/common/clock.hpp"
#include "tirtha/common/id.hpp"

namespace tirtha {

enum class SiteStatus { Live, Processing, Error };
enum class SafetyState { Pending, Safe, Unsafe, Moderation };
enum class ImageLabel { Unlabeled, Good, Bad };
enum class RunState { Queued, Preprocessing, Reconstructing, Postprocessing, Published, Failed, Archived };
enum class JobKind { PreprocessImage, ExecuteRun, Periodic };
enum class JobState { Ready, Claimed, Done, Dead };

std::string_view to_string(SiteStatus);
std::string_view to_string(SafetyState);
std::string_view to_string(ImageLabel);
std::string_view to_string(RunState);
std::string_view to_string(JobKind);
std::string_view to_string(JobState);

SiteStatus parse_site_status(std::string_view);
SafetyState parse_safety_state(std::string_view);
ImageLabel parse_image_label(std::string_view);
RunState parse_run_state(std::string_view);
JobKind parse_job_kind(std::string_view);
JobState parse_job_state(std::string_view);

/// Per-site reconstruction options; defaults follow the stock stage parameters.
struct ReconOptions {
  std::optional<ImageId> center_image;
  std::optional<std::array<double, 3>> orientation_override;  // Euler angles, degrees
  bool denoise = false;
  bool resample = false;
  double simplification_factor = 0.3;
  double min_observation_angle = 30.0;
  int texture_side = 2048;
  double denoise_lmd = 2.0;
  double denoise_eta = 1.5;

  /// Throws Error(Validation) when a field is out of its legal range.
  void validate() const;

  friend bool operator==(const ReconOptions&, const ReconOptions&) = default;
};

struct IqaThresholds {
  double dr_min = 100.0;
  double cnr_min = 17.5;
  double nr_min = 0.6;

  friend bool operator==(const IqaThresholds&, const IqaThresholds&) = default;
};

struct IqaReport {
  double dynamic_range = 0.0;
  double cnr = 0.0;
  double nr_score = 0.0;
  IqaThresholds thresholds_used;

  friend bool operator==(const IqaReport&, const IqaReport&) = default;
};

struct SiteInput {
  std::string name;
  std::string description;
  std::string country;
  std::string state;
  std::string district;
  std::string locality;
};

struct SiteRecord {
  SiteId id;
  std::string name;
  std::string description;
  std::string country, state, district, locality;
  std::string verbose_id;
  ReconOptions recon_options;
  std::optional<IqaThresholds> iqa_overrides;
  SiteStatus status = SiteStatus::Live;
  bool completed = false;
  bool archived = false;
  Timestamp created_at = 0;
  Timestamp updated_at = 0;
};

struct ContributorRecord {
  ContributorId id;
  std::string email;
  std::string name;
  bool banned = false;
  std::optional<std::string> ban_reason;
};

struct ContributionRecord {
  ContributionId id;
  SiteId site_id;
  ContributorId contributor_id;
  Timestamp submitted_at = 0;
  bool upload_complete = false;
  std::vector<ImageId> image_ids;
};

/// An image already written to blob storage, ready to be recorded.
struct ImageBlob {
  std::string stored_path;
  std::int64_t byte_size = 0;
  int width = 0;
  int height = 0;
  bool exif_present = false;
  std::string source_hash;
};

struct ImageRecord {
  ImageId id;
  ContributionId contribution_id;
  std::string stored_path;
  std::int64_t byte_size = 0;
  int width = 0;
  int height = 0;
  bool exif_present = false;
  std::string source_hash;
  SafetyState safety = SafetyState::Pending;
  ImageLabel label = ImageLabel::Unlabeled;
  std::optional<IqaReport> iqa;
  Timestamp created_at = 0;
};

enum class StageEntryKind { Transition, Stage };

struct StageLogEntry {
  StageEntryKind kind = StageEntryKind::Stage;
  std::string name;    // run state name for transitions, node name for stages
  std::string status;  // "OK", "FAILED", "TRANSITION"
  std::int64_t duration_ms = 0;
  std::string message;
  Timestamp at = 0;
};

struct RunRecord {
  RunId id;
  SiteId site_id;
  RunState state = RunState::Queued;
  Timestamp created_at = 0;
  std::optional<Timestamp> started_at;
  std::optional<Timestamp> ended_at;
  std::vector<ImageId> image_ids_used;
  std::vector<ContributionId> contribution_ids_used;
  std::vector<StageLogEntry> stage_log;
  std::optional<std::string> artifact_path;
  std::optional<std::string> artifact_digest;
  std::optional<std::string> raw_artifact_path;
  std::optional<std::string> ark;  // full "ark:/NAAN/name"
  std::optional<std::string> error;
  nlohmann::json report;           // compression report, registered views
};

/// Stored ARK row; the ark module owns the naming rules.
struct ArkRecord {
  std::string naan;
  std::string shoulder;
  std::string blade;
  char check_char = '0';
  std::optional<RunId> run_id;
  std::optional<std::string> target;
  std::string metadata = "{}";  // JSON document, stored verbatim
  Timestamp created_at = 0;

  std::string name() const { return shoulder + blade + check_char; }
};

struct JobEnvelope {
  JobId id;
  JobKind kind = JobKind::PreprocessImage;
  std::string payload;  // JSON text
  std::string idempotency_key;
  int attempts = 0;
  int max_attempts = 3;
  int priority = 0;
  Timestamp not_before = 0;
  JobState state = JobState::Ready;
  std::optional<std::string> claimed_by;
  Timestamp visible_at = 0;
  std::optional<std::string> last_error;
};

struct ServiceRequest {
  std::int64_t id = 0;
  std::string kind;  // "site" or "highres"
  nlohmann::json payload;
  std::optional<ContributorId> contributor_id;
  Timestamp created_at = 0;
};

struct MaintenanceEntry {
  std::int64_t id = 0;
  std::string task;
  nlohmann::json detail;
  Timestamp at = 0;
};

void to_json(nlohmann::json& j, const ReconOptions& o);
void from_json(const nlohmann::json& j, ReconOptions& o);
void to_json(nlohmann::json& j, const IqaThresholds& t);
void from_json(const nlohmann::json& j, IqaThresholds& t);
void to_json(nlohmann::json& j, const IqaReport& r);
void from_json(const nlohmann::json& j, IqaReport& r);
void to_json(nlohmann::json& j, const StageLogEntry& e);
void from_json(const nlohmann::json& j, StageLogEntry& e);
void to_json(nlohmann::json& j, const RunRecord& r);
void to_json(nlohmann::json& j, const SiteRecord& s);
void to_json(nlohmann::json& j, const ImageRecord& i);

/// Lowercased, ASCII-folded, underscore-joined key from name and location parts.
std::string make_verbose_id_base(const SiteInput& input);

}  // namespace tirtha
