#include "tirtha/orchestrator/preprocess.hpp"

#include <set>

#include "tirtha/common/error.hpp"
#include "tirtha/common/io.hpp"

namespace tirtha::orchestrator {

nlohmann::json preprocess_payload(ImageId image, PreprocessPhase phase, Timestamp requested_at) {
  nlohmann::json p = {{"image_id", image.value}, {"phase", phase == PreprocessPhase::Screen ? "screen" : "iqa"}};
  if (requested_at != 0) p["requested_at"] = requested_at;
  return p;
}

nlohmann::json execute_payload(RunId run) { return {{"run_id", run.value}}; }

Preprocessor::Settings Preprocessor::settings_from_config(const Config& config) {
  Settings s;
  s.iqa = ingest::IqaSettings::from_config(config);
  s.min_short_side = static_cast<int>(config.get_int("ingest.min_short_side", s.min_short_side));
  s.auto_trigger_image_count = static_cast<int>(config.get_int("run.auto_trigger_image_count", 0));
  return s;
}

PreprocessOutcome Preprocessor::handle(const nlohmann::json& payload) {
  ImageId image(payload.at("image_id").get<std::int64_t>());
  std::string phase = payload.value("phase", "screen");
  if (phase == "screen") return screen(image);
  if (phase == "iqa") return assess(image);
  throw Error(ErrorCode::Validation, "unknown preprocessing phase '" + phase + "'");
}

ingest::DecodedImage Preprocessor::load(const ImageRecord& record) const {
  Bytes bytes = read_file(record.stored_path);
  ingest::DecodeOptions opts;
  opts.min_short_side = settings_.min_short_side;
  return ingest::decode_and_validate(bytes, opts);
}

PreprocessOutcome Preprocessor::screen(ImageId id) {
  ImageRecord record = store_.get_image(id);
  if (record.safety != SafetyState::Pending) {
    // a crash between the safety write and IQA leaves a SAFE, unlabeled image
    if (record.safety == SafetyState::Safe && record.label == ImageLabel::Unlabeled) return assess(id);
    return {record.safety, record.label, true};
  }
  ingest::DecodedImage image;
  try {
    image = load(record);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::NotFound || e.code() == ErrorCode::Storage) throw;
    // the upload path validated this file; if it no longer decodes a human should look
    store_.set_image_safety(id, SafetyState::Moderation);
    return {SafetyState::Moderation, ImageLabel::Unlabeled, false};
  }
  ingest::SafetyVerdict verdict = ingest::classify_safety(image, local_, external_);
  SafetyState state = ingest::route(verdict);
  store_.set_image_safety(id, state);
  if (state != SafetyState::Safe) return {state, ImageLabel::Unlabeled, false};
  return assess(id);
}

PreprocessOutcome Preprocessor::assess(ImageId id) {
  ImageRecord record = store_.get_image(id);
  if (record.safety != SafetyState::Safe) return {record.safety, record.label, true};
  if (record.label != ImageLabel::Unlabeled) return {record.safety, record.label, true};

  SiteId site = store_.site_of_image(id);
  ingest::IqaSettings settings = settings_.iqa;
  if (auto s = store_.find_site(site); s && s->iqa_overrides) settings.thresholds = *s->iqa_overrides;

  IqaReport report;
  try {
    ingest::DecodedImage image = load(record);
    report = ingest::assess(image, scorer_, settings);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ScorerFailure && e.code() != ErrorCode::Corrupt &&
        e.code() != ErrorCode::TooSmall && e.code() != ErrorCode::UnsupportedFormat) {
      throw;
    }
    store_.set_image_safety(id, SafetyState::Moderation);
    return {SafetyState::Moderation, ImageLabel::Unlabeled, false};
  }
  ImageLabel label = ingest::label_image(report, settings.thresholds);
  store_.set_image_assessment(id, label, report);
  if (label == ImageLabel::Good) maybe_trigger_run(site);
  return {SafetyState::Safe, label, false};
}

void Preprocessor::maybe_trigger_run(SiteId site) {
  if (settings_.auto_trigger_image_count <= 0) return;
  store_.transaction([&] {
    if (!store_.active_runs().empty()) {
      for (const auto& r : store_.active_runs())
        if (r.site_id == site) return;
    }
    std::set<std::int64_t> used;
    if (auto last = store_.latest_published_run(site)) {
      for (auto i : last->image_ids_used) used.insert(i.value);
    }
    int fresh = 0;
    for (const auto& img : store_.images_for_site(site)) {
      if (img.label == ImageLabel::Good && !used.count(img.id.value)) ++fresh;
    }
    if (fresh >= settings_.auto_trigger_image_count) request_run(store_, queue_, site);
  });
}

RunRecord request_run(Store& store, JobQueue& queue, SiteId site) {
  return store.transaction([&] {
    RunRecord run = store.create_run(site, queue.clock().now());
    queue.enqueue(JobKind::ExecuteRun, execute_payload(run.id));
    return run;
  });
}

}  // namespace tirtha::orchestrator
