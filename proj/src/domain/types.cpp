#include "tirtha/domain/types.hpp"

#include <cctype>
#include <cmath>

#include "tirtha/common/error.hpp"

namespace tirtha {
namespace {

template <class E, std::size_t N>
E parse_enum(std::string_view text, const std::array<std::pair<E, std::string_view>, N>& table,
             std::string_view what) {
  for (const auto& [value, name] : table) {
    if (name == text) return value;
  }
  throw Error(ErrorCode::Validation, "unknown " + std::string(what) + ": " + std::string(text));
}

template <class E, std::size_t N>
std::string_view enum_name(E value, const std::array<std::pair<E, std::string_view>, N>& table) {
  for (const auto& [v, name] : table) {
    if (v == value) return name;
  }
  return "?";
}

constexpr std::array<std::pair<SiteStatus, std::string_view>, 3> kSiteStatus{{
    {SiteStatus::Live, "LIVE"}, {SiteStatus::Processing, "PROCESSING"}, {SiteStatus::Error, "ERROR"}}};
constexpr std::array<std::pair<SafetyState, std::string_view>, 4> kSafety{{
    {SafetyState::Pending, "PENDING"}, {SafetyState::Safe, "SAFE"},
    {SafetyState::Unsafe, "UNSAFE"}, {SafetyState::Moderation, "MODERATION"}}};
constexpr std::array<std::pair<ImageLabel, std::string_view>, 3> kLabel{{
    {ImageLabel::Unlabeled, "UNLABELED"}, {ImageLabel::Good, "GOOD"}, {ImageLabel::Bad, "BAD"}}};
constexpr std::array<std::pair<RunState, std::string_view>, 7> kRunState{{
    {RunState::Queued, "QUEUED"}, {RunState::Preprocessing, "PREPROCESSING"},
    {RunState::Reconstructing, "RECONSTRUCTING"}, {RunState::Postprocessing, "POSTPROCESSING"},
    {RunState::Published, "PUBLISHED"}, {RunState::Failed, "FAILED"}, {RunState::Archived, "ARCHIVED"}}};
constexpr std::array<std::pair<JobKind, std::string_view>, 3> kJobKind{{
    {JobKind::PreprocessImage, "PREPROCESS_IMAGE"}, {JobKind::ExecuteRun, "EXECUTE_RUN"},
    {JobKind::Periodic, "PERIODIC"}}};
constexpr std::array<std::pair<JobState, std::string_view>, 4> kJobState{{
    {JobState::Ready, "READY"}, {JobState::Claimed, "CLAIMED"}, {JobState::Done, "DONE"},
    {JobState::Dead, "DEAD"}}};

bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

}  // namespace

std::string_view to_string(SiteStatus v) { return enum_name(v, kSiteStatus); }
std::string_view to_string(SafetyState v) { return enum_name(v, kSafety); }
std::string_view to_string(ImageLabel v) { return enum_name(v, kLabel); }
std::string_view to_string(RunState v) { return enum_name(v, kRunState); }
std::string_view to_string(JobKind v) { return enum_name(v, kJobKind); }
std::string_view to_string(JobState v) { return enum_name(v, kJobState); }

SiteStatus parse_site_status(std::string_view s) { return parse_enum(s, kSiteStatus, "site status"); }
SafetyState parse_safety_state(std::string_view s) { return parse_enum(s, kSafety, "safety state"); }
ImageLabel parse_image_label(std::string_view s) { return parse_enum(s, kLabel, "image label"); }
RunState parse_run_state(std::string_view s) { return parse_enum(s, kRunState, "run state"); }
JobKind parse_job_kind(std::string_view s) { return parse_enum(s, kJobKind, "job kind"); }
JobState parse_job_state(std::string_view s) { return parse_enum(s, kJobState, "job state"); }

void ReconOptions::validate() const {
  if (!(simplification_factor > 0.0 && simplification_factor <= 1.0)) {
    throw Error(ErrorCode::Validation, "simplification_factor must be in (0, 1]");
  }
  if (!(min_observation_angle >= 0.0 && min_observation_angle < 90.0)) {
    throw Error(ErrorCode::Validation, "min_observation_angle must be in [0, 90)");
  }
  if (!is_power_of_two(texture_side)) {
    throw Error(ErrorCode::Validation, "texture_side must be a positive power of two");
  }
  if (!(denoise_lmd >= 0.0) || !(denoise_eta >= 0.0)) {
    throw Error(ErrorCode::Validation, "denoise parameters must be non-negative");
  }
  if (orientation_override) {
    for (double a : *orientation_override) {
      if (!std::isfinite(a)) throw Error(ErrorCode::Validation, "orientation must be finite");
    }
  }
}

void to_json(nlohmann::json& j, const ReconOptions& o) {
  j = nlohmann::json{{"denoise", o.denoise},
                     {"resample", o.resample},
                     {"simplification_factor", o.simplification_factor},
                     {"min_observation_angle", o.min_observation_angle},
                     {"texture_side", o.texture_side},
                     {"denoise_lmd", o.denoise_lmd},
                     {"denoise_eta", o.denoise_eta}};
  j["center_image"] = o.center_image ? nlohmann::json(o.center_image->value) : nlohmann::json(nullptr);
  j["orientation_override"] =
      o.orientation_override ? nlohmann::json(*o.orientation_override) : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, ReconOptions& o) {
  o = ReconOptions{};
  o.denoise = j.value("denoise", o.denoise);
  o.resample = j.value("resample", o.resample);
  o.simplification_factor = j.value("simplification_factor", o.simplification_factor);
  o.min_observation_angle = j.value("min_observation_angle", o.min_observation_angle);
  o.texture_side = j.value("texture_side", o.texture_side);
  o.denoise_lmd = j.value("denoise_lmd", o.denoise_lmd);
  o.denoise_eta = j.value("denoise_eta", o.denoise_eta);
  if (j.contains("center_image") && !j["center_image"].is_null()) {
    o.center_image = ImageId(j["center_image"].get<std::int64_t>());
  }
  if (j.contains("orientation_override") && !j["orientation_override"].is_null()) {
    o.orientation_override = j["orientation_override"].get<std::array<double, 3>>();
  }
}

void to_json(nlohmann::json& j, const IqaThresholds& t) {
  j = nlohmann::json{{"dr_min", t.dr_min}, {"cnr_min", t.cnr_min}, {"nr_min", t.nr_min}};
}

void from_json(const nlohmann::json& j, IqaThresholds& t) {
  t = IqaThresholds{};
  t.dr_min = j.value("dr_min", t.dr_min);
  t.cnr_min = j.value("cnr_min", t.cnr_min);
  t.nr_min = j.value("nr_min", t.nr_min);
}

void to_json(nlohmann::json& j, const IqaReport& r) {
  j = nlohmann::json{{"dynamic_range", r.dynamic_range},
                     {"cnr", r.cnr},
                     {"nr_score", r.nr_score},
                     {"thresholds_used", r.thresholds_used}};
}

void from_json(const nlohmann::json& j, IqaReport& r) {
  r.dynamic_range = j.at("dynamic_range").get<double>();
  r.cnr = j.at("cnr").get<double>();
  r.nr_score = j.at("nr_score").get<double>();
  r.thresholds_used = j.at("thresholds_used").get<IqaThresholds>();
}

void to_json(nlohmann::json& j, const StageLogEntry& e) {
  j = nlohmann::json{{"kind", e.kind == StageEntryKind::Transition ? "transition" : "stage"},
                     {"name", e.name},
                     {"status", e.status},
                     {"duration_ms", e.duration_ms},
                     {"message", e.message},
                     {"at", e.at}};
}

void from_json(const nlohmann::json& j, StageLogEntry& e) {
  e.kind = j.at("kind").get<std::string>() == "transition" ? StageEntryKind::Transition
                                                           : StageEntryKind::Stage;
  e.name = j.at("name").get<std::string>();
  e.status = j.at("status").get<std::string>();
  e.duration_ms = j.at("duration_ms").get<std::int64_t>();
  e.message = j.at("message").get<std::string>();
  e.at = j.at("at").get<Timestamp>();
}

namespace {
template <class T>
nlohmann::json opt(const std::optional<T>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}
}  // namespace

void to_json(nlohmann::json& j, const RunRecord& r) {
  std::vector<std::int64_t> images, contributions;
  for (auto id : r.image_ids_used) images.push_back(id.value);
  for (auto id : r.contribution_ids_used) contributions.push_back(id.value);
  j = nlohmann::json{{"id", r.id.value},
                     {"site_id", r.site_id.value},
                     {"state", to_string(r.state)},
                     {"created_at", r.created_at},
                     {"started_at", opt(r.started_at)},
                     {"ended_at", opt(r.ended_at)},
                     {"image_ids_used", images},
                     {"contribution_ids_used", contributions},
                     {"stage_log", r.stage_log},
                     {"artifact_path", opt(r.artifact_path)},
                     {"artifact_digest", opt(r.artifact_digest)},
                     {"raw_artifact_path", opt(r.raw_artifact_path)},
                     {"ark", opt(r.ark)},
                     {"error", opt(r.error)},
                     {"report", r.report.is_null() ? nlohmann::json::object() : r.report}};
}

void to_json(nlohmann::json& j, const SiteRecord& s) {
  j = nlohmann::json{{"id", s.id.value},
                     {"name", s.name},
                     {"description", s.description},
                     {"country", s.country},
                     {"state", s.state},
                     {"district", s.district},
                     {"locality", s.locality},
                     {"verbose_id", s.verbose_id},
                     {"recon_options", s.recon_options},
                     {"iqa_overrides", opt(s.iqa_overrides)},
                     {"status", to_string(s.status)},
                     {"completed", s.completed},
                     {"archived", s.archived},
                     {"created_at", s.created_at},
                     {"updated_at", s.updated_at}};
}

void to_json(nlohmann::json& j, const ImageRecord& i) {
  j = nlohmann::json{{"id", i.id.value},
                     {"contribution_id", i.contribution_id.value},
                     {"stored_path", i.stored_path},
                     {"byte_size", i.byte_size},
                     {"width", i.width},
                     {"height", i.height},
                     {"exif_present", i.exif_present},
                     {"source_hash", i.source_hash},
                     {"safety", to_string(i.safety)},
                     {"label", to_string(i.label)},
                     {"iqa", opt(i.iqa)},
                     {"created_at", i.created_at}};
}

namespace {

// Latin-1 supplement and a few Latin Extended-A letters, keyed by UTF-8 code point.
char fold_code_point(char32_t cp) {
  if (cp >= 0xC0 && cp <= 0xC5) return 'a';
  if (cp >= 0xE0 && cp <= 0xE5) return 'a';
  if (cp == 0xC7 || cp == 0xE7) return 'c';
  if ((cp >= 0xC8 && cp <= 0xCB) || (cp >= 0xE8 && cp <= 0xEB)) return 'e';
  if ((cp >= 0xCC && cp <= 0xCF) || (cp >= 0xEC && cp <= 0xEF)) return 'i';
  if (cp == 0xD1 || cp == 0xF1) return 'n';
  if ((cp >= 0xD2 && cp <= 0xD6) || cp == 0xD8 || (cp >= 0xF2 && cp <= 0xF6) || cp == 0xF8) return 'o';
  if ((cp >= 0xD9 && cp <= 0xDC) || (cp >= 0xF9 && cp <= 0xFC)) return 'u';
  if (cp == 0xDD || cp == 0xFD || cp == 0xFF) return 'y';
  if (cp >= 0x100 && cp <= 0x105) return 'a';
  if (cp >= 0x106 && cp <= 0x10D) return 'c';
  if (cp >= 0x10E && cp <= 0x111) return 'd';
  if (cp >= 0x112 && cp <= 0x11B) return 'e';
  if (cp >= 0x11C && cp <= 0x123) return 'g';
  if (cp >= 0x128 && cp <= 0x131) return 'i';
  if (cp >= 0x143 && cp <= 0x148) return 'n';
  if (cp >= 0x14C && cp <= 0x151) return 'o';
  if (cp >= 0x154 && cp <= 0x159) return 'r';
  if (cp >= 0x15A && cp <= 0x161) return 's';
  if (cp >= 0x162 && cp <= 0x167) return 't';
  if (cp >= 0x168 && cp <= 0x173) return 'u';
  if (cp >= 0x179 && cp <= 0x17E) return 'z';
  if (cp == 0x1E43 || cp == 0x1E47) return cp == 0x1E43 ? 'm' : 'n';  // ṃ ṇ
  if (cp == 0x1E6D) return 't';                                      // ṭ
  if (cp == 0x1E0D) return 'd';                                      // ḍ
  if (cp == 0x1E63) return 's';                                      // ṣ
  if (cp == 0x1E25) return 'h';                                      // ḥ
  return 0;
}

// Decodes one UTF-8 sequence; advances i. Invalid bytes decode to 0.
char32_t next_code_point(std::string_view s, std::size_t& i) {
  auto b0 = static_cast<unsigned char>(s[i]);
  int extra = b0 < 0x80 ? 0 : (b0 >> 5) == 0x6 ? 1 : (b0 >> 4) == 0xE ? 2 : (b0 >> 3) == 0x1E ? 3 : -1;
  if (extra < 0) {
    ++i;
    return 0;
  }
  char32_t cp = extra == 0 ? b0 : (b0 & (0x3F >> extra));
  ++i;
  for (int k = 0; k < extra; ++k, ++i) {
    if (i >= s.size()) return 0;
    cp = (cp << 6) | (static_cast<unsigned char>(s[i]) & 0x3F);
  }
  return cp;
}

}  // namespace

std::string make_verbose_id_base(const SiteInput& input) {
  std::string joined;
  for (const std::string* part : {&input.name, &input.locality, &input.district, &input.state,
                                  &input.country}) {
    if (part->empty()) continue;
    if (!joined.empty()) joined.push_back(' ');
    joined += *part;
  }
  std::string out;
  bool pending_sep = false;
  for (std::size_t i = 0; i < joined.size();) {
    char32_t cp = next_code_point(joined, i);
    char c = 0;
    if (cp < 0x80 && std::isalnum(static_cast<int>(cp))) {
      c = static_cast<char>(std::tolower(static_cast<int>(cp)));
    } else if (cp >= 0x80) {
      c = fold_code_point(cp);
    }
    if (c == 0) {
      pending_sep = true;
      continue;
    }
    if (pending_sep && !out.empty()) out.push_back('_');
    pending_sep = false;
    out.push_back(c);
  }
  return out;
}

}  // namespace tirtha
