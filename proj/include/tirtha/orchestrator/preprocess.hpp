#pragma once

#include <memory>
#include <string>

#include "tirtha/common/config.hpp"
#include "tirtha/domain/store.hpp"
#include "tirtha/ingest/iqa.hpp"
#include "tirtha/ingest/jpeg.hpp"
#include "tirtha/ingest/safety.hpp"
#include "tirtha/orchestrator/queue.hpp"

namespace tirtha::orchestrator {

enum class PreprocessPhase { Screen, Iqa };

nlohmann::json preprocess_payload(ImageId image, PreprocessPhase phase, Timestamp requested_at = 0);

struct PreprocessOutcome {
  SafetyState safety = SafetyState::Pending;
  ImageLabel label = ImageLabel::Unlabeled;
  bool skipped = false;  // already handled by an earlier delivery
};

/// Handles PREPROCESS_IMAGE jobs. The screen phase runs the safety gate and,
/// for SAFE images, IQA; the iqa phase (after a moderator approves) runs IQA
/// only. Both are no-ops once their result is recorded.
class Preprocessor {
 public:
  struct Settings {
    ingest::IqaSettings iqa;
    int min_short_side = 1080;
    int auto_trigger_image_count = 0;  // 0 disables
  };

  Preprocessor(Store& store, JobQueue& queue, const ingest::LocalSafetyFilter& local,
               ingest::ExternalSafetyClient* external, ingest::NoReferenceScorer& scorer, Settings settings)
      : store_(store), queue_(queue), local_(local), external_(external), scorer_(scorer), settings_(settings) {}

  static Settings settings_from_config(const Config& config);

  PreprocessOutcome handle(const nlohmann::json& payload);
  PreprocessOutcome screen(ImageId image);
  PreprocessOutcome assess(ImageId image);

 private:
  ingest::DecodedImage load(const ImageRecord& record) const;
  void maybe_trigger_run(SiteId site);

  Store& store_;
  JobQueue& queue_;
  const ingest::LocalSafetyFilter& local_;
  ingest::ExternalSafetyClient* external_;
  ingest::NoReferenceScorer& scorer_;
  Settings settings_;
};

/// Creates a QUEUED run and its EXECUTE_RUN job in one transaction.
/// Throws CONFLICT while the site has an active run.
RunRecord request_run(Store& store, JobQueue& queue, SiteId site);

nlohmann::json execute_payload(RunId run);

}  // namespace tirtha::orchestrator
