#include "tirtha/api/service.hpp"

#include <unistd.h>

#include <atomic>
#include <fstream>

#include <httplib.h>

#include "tirtha/ark/ark.hpp"
#include "tirtha/common/digest.hpp"
#include "tirtha/common/error.hpp"
#include "tirtha/common/io.hpp"
#include "tirtha/ingest/jpeg.hpp"
#include "tirtha/orchestrator/preprocess.hpp"

namespace tirtha::api {

namespace fs = std::filesystem;
using orchestrator::Platform;

ServiceSettings ServiceSettings::from_config(const Config& config) {
  ServiceSettings s;
  s.max_upload_bytes = static_cast<std::uint64_t>(config.get_int("upload.max_bytes", static_cast<std::int64_t>(s.max_upload_bytes)));
  s.per_ip_daily = static_cast<int>(config.get_int("upload.per_ip_daily", s.per_ip_daily));
  s.site_base_url = config.get_string("site.base_url", "");
  s.min_short_side = static_cast<int>(config.get_int("ingest.min_short_side", s.min_short_side));
  return s;
}

namespace {

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::Validation:
    case ErrorCode::EmptyContribution:
    case ErrorCode::UnsupportedFormat:
    case ErrorCode::Corrupt:
    case ErrorCode::TooSmall:
      return 422;
    case ErrorCode::NotFound:
    case ErrorCode::UnknownArk:
      return 404;
    case ErrorCode::Conflict:
    case ErrorCode::DuplicateVerboseId:
    case ErrorCode::SiteCompleted:
    case ErrorCode::AlreadyBound:
    case ErrorCode::IllegalTransition:
      return 409;
    case ErrorCode::ContributorBanned:
      return 403;
    case ErrorCode::Malformed:
    case ErrorCode::BadCheck:
      return 400;
    default:
      return 500;
  }
}

void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view code, const std::string& message,
                nlohmann::json detail = nullptr) {
  send_json(res, status, {{"code", code}, {"message", message}, {"detail", std::move(detail)}});
}

void send_error(httplib::Response& res, const Error& e) {
  send_error(res, http_status(e.code()), to_string(e.code()), e.what());
}

std::optional<nlohmann::json> json_body(const httplib::Request& req, httplib::Response& res) {
  auto body = nlohmann::json::parse(req.body, nullptr, false);
  if (body.is_discarded() || !body.is_object()) {
    send_error(res, 400, "MALFORMED", "request body must be a JSON object");
    return std::nullopt;
  }
  return body;
}

std::string trimmed(std::string s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::optional<std::int64_t> parse_int(const std::string& s) {
  if (s.empty() || s.size() > 18) return std::nullopt;
  std::int64_t v = 0;
  for (char c : s) {
    if (c < '0' || c > '9') return std::nullopt;
    v = v * 10 + (c - '0');
  }
  return v;
}

std::string etag_of(const std::string& digest) { return "\"" + digest + "\""; }

bool etag_matches(const std::string& header, const std::string& etag) {
  if (header == "*") return true;
  std::size_t pos = 0;
  while (pos < header.size()) {
    auto comma = header.find(',', pos);
    std::string item = trimmed(header.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
    if (item.rfind("W/", 0) == 0) item = item.substr(2);
    if (item == etag) return true;
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return false;
}

/// One streamed multipart part spooled to disk.
struct SpooledPart {
  std::string field;
  std::string filename;
  fs::path path;
  std::uint64_t size = 0;
  bool too_large = false;
};

std::atomic<std::uint64_t> spool_counter{0};

}  // namespace

struct ApiService::Impl {
  ApiService& self;

  Platform& p() { return self.platform_; }
  Store& store() { return self.platform_.store(); }
  Timestamp now() { return self.platform_.clock().now(); }

  std::optional<SiteRecord> lookup_site(const std::string& key) {
    if (auto id = parse_int(key)) {
      if (auto s = store().find_site(SiteId(*id))) return s;
    }
    return store().find_site_by_verbose_id(key);
  }

  std::optional<AuthContext> authenticate(const httplib::Request& req) {
    std::string token = bearer_token(req.get_header_value("Authorization"));
    if (token.empty()) return std::nullopt;
    return self.verifier_.verify(token);
  }

  /// 401 without a token, 403 for a token that is not an admin token.
  bool require_admin(const httplib::Request& req, httplib::Response& res) {
    std::string token = bearer_token(req.get_header_value("Authorization"));
    if (token.empty()) {
      send_error(res, 401, "UNAUTHORIZED", "admin token required");
      return false;
    }
    if (!self.admins_.contains(token)) {
      send_error(res, 403, "FORBIDDEN", "not an admin token");
      return false;
    }
    return true;
  }

  nlohmann::json run_summary(const RunRecord& run, const SiteRecord& site) {
    nlohmann::json j = {{"id", run.id.value}, {"state", to_string(run.state)}, {"ark", nullptr}, {"published_at", nullptr}};
    if (run.ark) j["ark"] = *run.ark;
    if (run.ended_at) j["published_at"] = *run.ended_at;
    j["model_url"] = "/api/sites/" + site.verbose_id + "/model";
    if (run.report.contains("registered_views")) {
      j["registered_views"] = run.report["registered_views"];
      j["total_views"] = run.report.value("total_views", nlohmann::json());
    }
    return j;
  }

  nlohmann::json site_summary(const SiteRecord& site) {
    nlohmann::json j = {{"id", site.id.value},       {"verbose_id", site.verbose_id}, {"name", site.name},
                        {"completed", site.completed}, {"status", to_string(site.status)}, {"latest_run", nullptr}};
    if (auto run = store().latest_published_run(site.id)) j["latest_run"] = run_summary(*run, site);
    return j;
  }

  // GET /api/sites
  void list_sites(const httplib::Request& req, httplib::Response& res) {
    std::string q = req.has_param("q") ? req.get_param_value("q") : "";
    std::int64_t limit = 50, offset = 0;
    if (req.has_param("limit")) {
      auto v = parse_int(req.get_param_value("limit"));
      if (!v || *v < 1 || *v > 500) return send_error(res, 422, "VALIDATION", "limit must be in [1, 500]");
      limit = *v;
    }
    if (req.has_param("offset")) {
      auto v = parse_int(req.get_param_value("offset"));
      if (!v) return send_error(res, 422, "VALIDATION", "offset must be a non-negative integer");
      offset = *v;
    }
    std::vector<SiteRecord> sites = store().search_sites(q);
    nlohmann::json items = nlohmann::json::array();
    for (std::int64_t i = offset; i < static_cast<std::int64_t>(sites.size()) && i < offset + limit; ++i) {
      items.push_back(site_summary(sites[static_cast<std::size_t>(i)]));
    }
    nlohmann::json body = {{"items", items}, {"total", sites.size()}, {"next_offset", nullptr}};
    if (offset + limit < static_cast<std::int64_t>(sites.size())) body["next_offset"] = offset + limit;
    send_json(res, 200, body);
  }

  // GET /api/sites/{id}
  void get_site(const httplib::Request& req, httplib::Response& res) {
    auto site = lookup_site(req.matches[1]);
    if (!site) return send_error(res, 404, "NOT_FOUND", "no such site");
    nlohmann::json body = site_summary(*site);
    body["description"] = site->description;
    body["location"] = {{"country", site->country},
                        {"state", site->state},
                        {"district", site->district},
                        {"locality", site->locality}};
    send_json(res, 200, body);
  }

  // GET /api/sites/{id}/model
  void get_model(const httplib::Request& req, httplib::Response& res) {
    auto site = lookup_site(req.matches[1]);
    if (!site) return send_error(res, 404, "NOT_FOUND", "no such site");
    auto run = store().latest_published_run(site->id);
    if (!run || !run->artifact_path || !run->artifact_digest) {
      return send_error(res, 404, "NOT_FOUND", "site has no published model");
    }
    std::string etag = etag_of(*run->artifact_digest);
    if (req.has_header("If-None-Match") && etag_matches(req.get_header_value("If-None-Match"), etag)) {
      res.status = 304;
      res.set_header("ETag", etag);
      return;
    }
    Bytes bytes;
    try {
      bytes = read_file(*run->artifact_path);
    } catch (const Error&) {
      return send_error(res, 500, "INTEGRITY", "artifact is missing from storage");
    }
    if (sha256_hex(bytes) != *run->artifact_digest) {
      return send_error(res, 500, "INTEGRITY", "artifact does not match its recorded digest");
    }
    res.status = 200;
    res.set_header("ETag", etag);
    res.set_header("Cache-Control", "public, max-age=0, must-revalidate");
    res.set_header("Content-Disposition", "inline; filename=\"" + site->verbose_id + ".glb\"");
    res.set_content(std::string(bytes.begin(), bytes.end()), "model/gltf-binary");
  }

  // POST /api/contributions
  void contribute(const httplib::Request& req, httplib::Response& res, const httplib::ContentReader& reader) {
    std::vector<SpooledPart> parts;
    std::string site_field;
    std::ofstream out;
    bool any_too_large = false;

    auto close_part = [&] {
      if (out.is_open()) out.close();
    };
    auto cleanup = [&] {
      close_part();
      for (const auto& part : parts) {
        std::error_code ec;
        if (!part.path.empty()) fs::remove(part.path, ec);
      }
    };

    if (req.is_multipart_form_data()) {
      reader(
          [&](const httplib::MultipartFormData& header) {
            close_part();
            SpooledPart part;
            part.field = header.name;
            part.filename = header.filename;
            if (part.field == "images") {
              part.path = p().blobs().upload_dir() /
                          ("part-" + std::to_string(::getpid()) + "-" + std::to_string(spool_counter.fetch_add(1)));
              out.open(part.path, std::ios::binary | std::ios::trunc);
            }
            parts.push_back(std::move(part));
            return true;
          },
          [&](const char* data, std::size_t len) {
            if (parts.empty()) return true;
            SpooledPart& part = parts.back();
            part.size += len;
            if (part.field == "site_id") {
              if (site_field.size() < 256) site_field.append(data, std::min<std::size_t>(len, 256));
            } else if (part.field == "images" && !part.too_large) {
              if (part.size > self.settings_.max_upload_bytes) {
                // keep draining the body but stop spooling
                part.too_large = true;
                any_too_large = true;
                close_part();
                std::error_code ec;
                fs::remove(part.path, ec);
              } else {
                out.write(data, static_cast<std::streamsize>(len));
              }
            }
            return true;
          });
    } else {
      reader([](const char*, std::size_t) { return true; });
    }
    close_part();

    auto respond = [&](auto&&... args) {
      cleanup();
      send_error(res, std::forward<decltype(args)>(args)...);
    };

    auto auth = authenticate(req);
    if (!auth) return respond(401, "UNAUTHORIZED", "a valid bearer token is required");
    if (!req.is_multipart_form_data()) return respond(400, "MALFORMED", "expected multipart/form-data");
    if (!auth->verified) return respond(403, "UNVERIFIED", "the identity provider has not verified this account");
    if (auth->email.empty()) return respond(403, "UNVERIFIED", "token carries no email");
    ContributorRecord contributor = store().upsert_contributor(auth->email, auth->name);
    if (contributor.banned) return respond(403, "CONTRIBUTOR_BANNED", "contributor is banned");

    std::size_t files = 0;
    for (const auto& part : parts) files += part.field == "images";
    {
      std::lock_guard<std::mutex> lock(self.rate_mutex_);
      auto key = std::make_pair(req.remote_addr, now() / kDay);
      int& used = self.uploads_per_ip_[key];
      if (used + static_cast<int>(files) > self.settings_.per_ip_daily) {
        return respond(429, "RATE_LIMITED", "daily upload limit reached for this address");
      }
      used += static_cast<int>(files);
    }

    auto site = lookup_site(trimmed(site_field));
    if (!site) return respond(404, "NOT_FOUND", "no such site");
    if (site->completed) return respond(409, "SITE_COMPLETED", "site " + site->verbose_id + " no longer accepts contributions");
    if (any_too_large) {
      nlohmann::json detail = nlohmann::json::array();
      for (const auto& part : parts)
        if (part.too_large) detail.push_back({{"filename", part.filename}, {"limit", self.settings_.max_upload_bytes}});
      return respond(413, "PAYLOAD_TOO_LARGE", "an image exceeds upload.max_bytes", detail);
    }

    std::vector<ImageBlob> blobs;
    nlohmann::json rejected = nlohmann::json::array();
    ingest::DecodeOptions opts;
    opts.min_short_side = self.settings_.min_short_side;
    for (auto& part : parts) {
      if (part.field != "images") continue;
      try {
        Bytes bytes = read_file(part.path);
        ingest::DecodedImage image = ingest::decode_and_validate(bytes, opts);
        fs::path stored = p().blobs().adopt_image(part.path, image.source_hash);
        part.path.clear();
        blobs.push_back(ImageBlob{stored.string(), static_cast<std::int64_t>(bytes.size()), image.width(),
                                  image.height(), image.exif.has_value(), image.source_hash});
      } catch (const Error& e) {
        rejected.push_back({{"filename", part.filename}, {"reason", to_string(e.code())}});
      }
    }
    if (blobs.empty()) {
      cleanup();
      return send_error(res, 422, "EMPTY_CONTRIBUTION", "no decodable images in the request", {{"rejected", rejected}});
    }
    try {
      ContributionRecord rec = store().record_contribution(site->id, contributor.id, blobs, now());
      cleanup();
      send_json(res, 202, {{"contribution_id", rec.id.value}, {"accepted_count", rec.image_ids.size()}, {"rejected", rejected}});
    } catch (const Error& e) {
      cleanup();
      send_error(res, e);
    }
  }

  // POST /api/requests/site
  void request_site(const httplib::Request& req, httplib::Response& res) {
    auto auth = authenticate(req);
    if (!auth) return send_error(res, 401, "UNAUTHORIZED", "a valid bearer token is required");
    auto body = json_body(req, res);
    if (!body) return;
    std::string name = trimmed(body->value("name", ""));
    if (name.empty()) return send_error(res, 422, "VALIDATION", "name is required");
    std::optional<ContributorId> who;
    if (!auth->email.empty()) who = store().upsert_contributor(auth->email, auth->name).id;
    nlohmann::json payload = {{"name", name}, {"location", body->value("location", "")}, {"note", body->value("note", "")}};
    std::int64_t id = store().insert_request("site", payload, who, now());
    send_json(res, 202, {{"request_id", id}, {"status", "queued"}});
  }

  // POST /api/requests/highres
  void request_highres(const httplib::Request& req, httplib::Response& res) {
    auto auth = authenticate(req);
    if (!auth) return send_error(res, 401, "UNAUTHORIZED", "a valid bearer token is required");
    auto body = json_body(req, res);
    if (!body) return;
    std::string site_key;
    if (body->contains("site_id")) {
      const auto& v = (*body)["site_id"];
      site_key = v.is_number_integer() ? std::to_string(v.get<std::int64_t>()) : v.is_string() ? v.get<std::string>() : "";
    }
    std::string contact = trimmed(body->value("contact", ""));
    if (contact.empty()) return send_error(res, 422, "VALIDATION", "contact is required");
    auto site = lookup_site(site_key);
    if (!site) return send_error(res, 404, "NOT_FOUND", "no such site");
    nlohmann::json payload = {{"site_id", site->id.value}, {"contact", contact}, {"run_id", nullptr}, {"raw_artifact_path", nullptr}};
    if (auto run = store().latest_published_run(site->id)) {
      payload["run_id"] = run->id.value;
      if (run->raw_artifact_path) payload["raw_artifact_path"] = *run->raw_artifact_path;
    }
    std::optional<ContributorId> who;
    if (!auth->email.empty()) who = store().upsert_contributor(auth->email, auth->name).id;
    std::int64_t id = store().insert_request("highres", payload, who, now());
    send_json(res, 202, {{"request_id", id}, {"status", "queued"}});
  }

  std::optional<ark::Resolved> resolve_ark(const std::string& naan, const std::string& name, httplib::Response& res) {
    try {
      ark::ArkName parsed = ark::parse("ark:/" + naan + "/" + name);
      return ark::resolve(store(), parsed);
    } catch (const Error& e) {
      send_error(res, e);
      return std::nullopt;
    }
  }

  // GET /ark:/{naan}/{name}
  void ark_redirect(const httplib::Request& req, httplib::Response& res) {
    auto resolved = resolve_ark(req.matches[1], req.matches[2], res);
    if (!resolved) return;
    if (resolved->status == ark::Resolution::Gone) return send_error(res, 410, "GONE", "the identified run was archived");
    if (resolved->status != ark::Resolution::Found || !resolved->record->target) {
      return send_error(res, 404, "UNKNOWN_ARK", "no such ark");
    }
    res.status = 302;
    res.set_header("Location", self.settings_.site_base_url + *resolved->record->target);
  }

  // GET /api/ark/{naan}/{name}
  void ark_metadata(const httplib::Request& req, httplib::Response& res) {
    auto resolved = resolve_ark(req.matches[1], req.matches[2], res);
    if (!resolved) return;
    if (resolved->status == ark::Resolution::Unknown || !resolved->record) {
      return send_error(res, 404, "UNKNOWN_ARK", "no such ark");
    }
    const ArkRecord& rec = *resolved->record;
    nlohmann::json metadata = nlohmann::json::parse(rec.metadata, nullptr, false);
    nlohmann::json body = {{"ark", "ark:/" + rec.naan + "/" + rec.name()},
                           {"target", rec.target ? nlohmann::json(*rec.target) : nlohmann::json()},
                           {"metadata", metadata.is_discarded() ? nlohmann::json::object() : metadata},
                           {"status", resolved->status == ark::Resolution::Gone ? "archived" : "active"}};
    send_json(res, resolved->status == ark::Resolution::Gone ? 410 : 200, body);
  }

  // GET /api/admin/moderation
  void moderation_queue(const httplib::Request& req, httplib::Response& res) {
    if (!require_admin(req, res)) return;
    nlohmann::json items = nlohmann::json::array();
    for (const auto& img : store().moderation_queue()) {
      items.push_back({{"image_id", img.id.value},
                       {"site_id", store().site_of_image(img.id).value},
                       {"contribution_id", img.contribution_id.value},
                       {"source_hash", img.source_hash},
                       {"width", img.width},
                       {"height", img.height},
                       {"created_at", img.created_at}});
    }
    send_json(res, 200, {{"items", items}});
  }

  // POST /api/admin/moderation/{image_id}
  void moderate(const httplib::Request& req, httplib::Response& res) {
    if (!require_admin(req, res)) return;
    auto body = json_body(req, res);
    if (!body) return;
    std::string action = body->value("action", "");
    if (action != "approve" && action != "reject") {
      return send_error(res, 422, "VALIDATION", "action must be 'approve' or 'reject'");
    }
    ImageId id(*parse_int(req.matches[1]));
    auto img = store().find_image(id);
    if (!img) return send_error(res, 404, "NOT_FOUND", "no such image");
    SafetyState target = action == "approve" ? SafetyState::Safe : SafetyState::Unsafe;
    if (img->safety == target) {
      return send_json(res, 200, {{"image_id", id.value}, {"safety", to_string(target)}});
    }
    if (img->safety != SafetyState::Moderation) {
      return send_error(res, 409, "CONFLICT", "image is " + std::string(to_string(img->safety)) + ", not in moderation");
    }
    store().transaction([&] {
      store().set_image_safety(id, target);
      if (target == SafetyState::Safe) {
        p().queue().enqueue(JobKind::PreprocessImage,
                            orchestrator::preprocess_payload(id, orchestrator::PreprocessPhase::Iqa, now()));
      }
    });
    send_json(res, 200, {{"image_id", id.value}, {"safety", to_string(target)}});
  }

  // POST /api/admin/sites
  void create_site(const httplib::Request& req, httplib::Response& res) {
    if (!require_admin(req, res)) return;
    auto body = json_body(req, res);
    if (!body) return;
    try {
      SiteInput input;
      input.name = trimmed(body->value("name", ""));
      input.description = body->value("description", "");
      input.country = body->value("country", "");
      input.state = body->value("state", "");
      input.district = body->value("district", "");
      input.locality = body->value("locality", "");
      ReconOptions options;
      if (body->contains("options")) options = (*body)["options"].get<ReconOptions>();
      SiteRecord site = store().create_site(input, options, now());
      send_json(res, 201, site_summary(site));
    } catch (const Error& e) {
      send_error(res, e);
    } catch (const nlohmann::json::exception& e) {
      send_error(res, 422, "VALIDATION", e.what());
    }
  }

  // POST /api/admin/sites/{id}/complete
  void complete_site(const httplib::Request& req, httplib::Response& res) {
    if (!require_admin(req, res)) return;
    auto site = lookup_site(req.matches[1]);
    if (!site) return send_error(res, 404, "NOT_FOUND", "no such site");
    try {
      SiteRecord done = store().complete_site(site->id, now());
      send_json(res, 200, site_summary(done));
    } catch (const Error& e) {
      send_error(res, e);
    }
  }

  // POST /api/admin/runs
  void create_run(const httplib::Request& req, httplib::Response& res) {
    if (!require_admin(req, res)) return;
    auto body = json_body(req, res);
    if (!body) return;
    std::string key;
    if (body->contains("site_id")) {
      const auto& v = (*body)["site_id"];
      key = v.is_number_integer() ? std::to_string(v.get<std::int64_t>()) : v.is_string() ? v.get<std::string>() : "";
    }
    auto site = lookup_site(key);
    if (!site) return send_error(res, 404, "NOT_FOUND", "no such site");
    try {
      RunRecord run = orchestrator::request_run(store(), p().queue(), site->id);
      send_json(res, 202, {{"run_id", run.id.value}, {"state", to_string(run.state)}});
    } catch (const Error& e) {
      send_error(res, e);
    }
  }

  // GET /api/runs/{id}
  void get_run(const httplib::Request& req, httplib::Response& res) {
    auto run = store().find_run(RunId(*parse_int(req.matches[1])));
    if (!run) return send_error(res, 404, "NOT_FOUND", "no such run");
    SiteRecord site = store().get_site(run->site_id);
    nlohmann::json body = run_summary(*run, site);
    body["site"] = site.verbose_id;
    body["error"] = run->error ? nlohmann::json(*run->error) : nlohmann::json();
    nlohmann::json stages = nlohmann::json::array();
    for (const auto& e : run->stage_log) {
      if (e.kind == StageEntryKind::Stage) stages.push_back({{"name", e.name}, {"status", e.status}, {"duration_ms", e.duration_ms}});
    }
    body["stages"] = stages;
    if (run->report.contains("compression")) body["compression"] = run->report["compression"];
    send_json(res, 200, body);
  }

  // GET /sites/{verbose_id}: minimal landing page for ARK redirects when no frontend is deployed
  void site_page(const httplib::Request& req, httplib::Response& res) {
    auto site = store().find_site_by_verbose_id(req.matches[1].str());
    if (!site) return send_error(res, 404, "NOT_FOUND", "no such site");
    std::string html = "<!doctype html><title>" + site->verbose_id + "</title><p>" + site->verbose_id +
                       "</p><p><a href=\"/api/sites/" + site->verbose_id + "/model\">model</a></p>";
    res.set_content(html, "text/html; charset=utf-8");
  }

  void healthz(const httplib::Request&, httplib::Response& res) {
    bool ok = store().healthy();
    send_json(res, ok ? 200 : 503, {{"status", ok ? "ok" : "degraded"}, {"queue_depth", store().queue_depth()}, {"db_ok", ok}});
  }
};

ApiService::ApiService(Platform& platform, const TokenVerifier& verifier, AdminTokens admins, ServiceSettings settings)
    : platform_(platform), verifier_(verifier), admins_(std::move(admins)), settings_(std::move(settings)) {}

ApiService::~ApiService() { stop(); }

void ApiService::install(httplib::Server& server) {
  auto impl = std::make_shared<Impl>(Impl{*this});
  auto wrap = [impl](void (Impl::*fn)(const httplib::Request&, httplib::Response&)) {
    return [impl, fn](const httplib::Request& req, httplib::Response& res) {
      try {
        (impl.get()->*fn)(req, res);
      } catch (const Error& e) {
        send_error(res, e);
      } catch (const std::exception& e) {
        send_error(res, 500, "INTERNAL", e.what());
      }
    };
  };

  server.Get("/healthz", wrap(&Impl::healthz));
  server.Get("/api/sites", wrap(&Impl::list_sites));
  server.Get(R"(/api/sites/([^/]+)/model)", wrap(&Impl::get_model));
  server.Get(R"(/api/sites/([^/]+))", wrap(&Impl::get_site));
  server.Get(R"(/api/runs/(\d+))", wrap(&Impl::get_run));
  server.Post("/api/contributions",
              [impl](const httplib::Request& req, httplib::Response& res, const httplib::ContentReader& reader) {
                try {
                  impl->contribute(req, res, reader);
                } catch (const Error& e) {
                  send_error(res, e);
                } catch (const std::exception& e) {
                  send_error(res, 500, "INTERNAL", e.what());
                }
              });
  server.Post("/api/requests/site", wrap(&Impl::request_site));
  server.Post("/api/requests/highres", wrap(&Impl::request_highres));
  server.Get(R"(/ark:/?([^/]+)/([^/]+))", wrap(&Impl::ark_redirect));
  server.Get(R"(/api/ark/([^/]+)/([^/]+))", wrap(&Impl::ark_metadata));
  server.Get("/api/admin/moderation", wrap(&Impl::moderation_queue));
  server.Post(R"(/api/admin/moderation/(\d+))", wrap(&Impl::moderate));
  server.Post("/api/admin/sites", wrap(&Impl::create_site));
  server.Post(R"(/api/admin/sites/([^/]+)/complete)", wrap(&Impl::complete_site));
  server.Post("/api/admin/runs", wrap(&Impl::create_run));
  server.Get(R"(/sites/([^/]+))", wrap(&Impl::site_page));
}

bool ApiService::start(const std::string& host, int port) {
  server_ = std::make_unique<httplib::Server>();
  install(*server_);
  if (port == 0) {
    port_ = server_->bind_to_any_port(host);
  } else {
    port_ = server_->bind_to_port(host, port) ? port : -1;
  }
  if (port_ <= 0) return false;
  thread_ = std::make_unique<std::thread>([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return true;
}

void ApiService::stop() {
  if (server_) server_->stop();
  if (thread_ && thread_->joinable()) thread_->join();
  thread_.reset();
  server_.reset();
}

}  // namespace tirtha::api
