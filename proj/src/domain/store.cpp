#include "tirtha/domain/store.hpp"

#include <sqlite3.h>

#include <algorithm>
#include <cctype>

#include "sqlite.hpp"
#include "tirtha/common/digest.hpp"
#include "tirtha/common/error.hpp"

namespace tirtha {

using sql::Stmt;

namespace {

constexpr const char* kSchema = R"sql(
CREATE TABLE IF NOT EXISTS sites(
  id INTEGER PRIMARY KEY AUTOINCREMENT,
  name TEXT NOT NULL CHECK(length(name) > 0),
  description TEXT NOT NULL DEFAULT '',
  country TEXT NOT NULL DEFAULT '',
  state TEXT NOT NULL DEFAULT '',
  district TEXT NOT NULL DEFAULT '',
  locality TEXT NOT NULL DEFAULT '',
  verbose_id TEXT NOT NULL UNIQUE CHECK(length(verbose_id) > 0),
  options TEXT NOT NULL,
  iqa_overrides TEXT,
  status TEXT NOT NULL,
  completed INTEGER NOT NULL DEFAULT 0,
  archived INTEGER NOT NULL DEFAULT 0,
  created_at INTEGER NOT NULL,
  updated_at INTEGER NOT NULL);

CREATE TABLE IF NOT EXISTS contributors(
  id INTEGER PRIMARY KEY AUTOINCREMENT,
  email TEXT NOT NULL UNIQUE,
  name TEXT NOT NULL,
  banned INTEGER NOT NULL DEFAULT 0,
  ban_reason TEXT);

CREATE TABLE IF NOT EXISTS contributions(
  id INTEGER PRIMARY KEY AUTOINCREMENT,
  site_id INTEGER NOT NULL REFERENCES sites(id),
  contributor_id INTEGER NOT NULL REFERENCES contributors(id),
  submitted_at INTEGER NOT NULL,
  upload_complete INTEGER NOT NULL DEFAULT 0);

CREATE TRIGGER IF NOT EXISTS contributions_closed_site_insert
BEFORE INSERT ON contributions
WHEN (SELECT completed FROM sites WHERE id = NEW.site_id) = 1
BEGIN SELECT RAISE(ABORT, 'SITE_COMPLETED'); END;

CREATE TRIGGER IF NOT EXISTS contributions_closed_site_finalize
BEFORE UPDATE OF upload_complete ON contributions
WHEN NEW.upload_complete = 1 AND OLD.upload_complete = 0
 AND (SELECT completed FROM sites WHERE id = NEW.site_id) = 1
BEGIN SELECT RAISE(ABORT, 'SITE_COMPLETED'); END;

CREATE TABLE IF NOT EXISTS images(
  id INTEGER PRIMARY KEY AUTOINCREMENT,
  contribution_id INTEGER NOT NULL REFERENCES contributions(id),
  ordinal INTEGER NOT NULL,
  stored_path TEXT NOT NULL,
  byte_size INTEGER NOT NULL,
  width INTEGER NOT NULL,
  height INTEGER NOT NULL,
  exif_present INTEGER NOT NULL,
  source_hash TEXT NOT NULL,
  safety TEXT NOT NULL,
  label TEXT NOT NULL,
  iqa TEXT,
  created_at INTEGER NOT NULL,
  CHECK(label <> 'GOOD' OR safety = 'SAFE'));
CREATE INDEX IF NOT EXISTS images_by_contribution ON images(contribution_id);

CREATE TABLE IF NOT EXISTS runs(
  id INTEGER PRIMARY KEY AUTOINCREMENT,
  site_id INTEGER NOT NULL REFERENCES sites(id),
  state TEXT NOT NULL,
  created_at INTEGER NOT NULL,
  started_at INTEGER,
  ended_at INTEGER,
  image_ids TEXT NOT NULL DEFAULT '[]',
  contribution_ids TEXT NOT NULL DEFAULT '[]',
  stage_log TEXT NOT NULL DEFAULT '[]',
  artifact_path TEXT,
  artifact_digest TEXT,
  raw_artifact_path TEXT,
  ark TEXT UNIQUE,
  error TEXT,
  report TEXT NOT NULL DEFAULT '{}',
  lease_holder TEXT,
  lease_expires INTEGER NOT NULL DEFAULT 0,
  CHECK(CASE state
          WHEN 'PUBLISHED' THEN ark IS NOT NULL AND artifact_path IS NOT NULL
          WHEN 'ARCHIVED' THEN 1
          ELSE ark IS NULL END));
CREATE UNIQUE INDEX IF NOT EXISTS runs_one_active_per_site ON runs(site_id)
  WHERE state IN ('QUEUED', 'PREPROCESSING', 'RECONSTRUCTING', 'POSTPROCESSING');

CREATE TRIGGER IF NOT EXISTS runs_ark_immutable
BEFORE UPDATE OF ark ON runs
WHEN OLD.ark IS NOT NULL AND (NEW.ark IS NULL OR NEW.ark <> OLD.ark)
BEGIN SELECT RAISE(ABORT, 'ARK_IMMUTABLE'); END;

CREATE TABLE IF NOT EXISTS arks(
  naan TEXT NOT NULL,
  name TEXT NOT NULL,
  shoulder TEXT NOT NULL,
  blade TEXT NOT NULL,
  check_char TEXT NOT NULL,
  run_id INTEGER UNIQUE REFERENCES runs(id),
  target TEXT,
  metadata TEXT NOT NULL DEFAULT '{}',
  created_at INTEGER NOT NULL,
  PRIMARY KEY(naan, name));

CREATE TABLE IF NOT EXISTS jobs(
  id INTEGER PRIMARY KEY AUTOINCREMENT,
  kind TEXT NOT NULL,
  payload TEXT NOT NULL,
  idem_key TEXT NOT NULL UNIQUE,
  attempts INTEGER NOT NULL DEFAULT 0,
  max_attempts INTEGER NOT NULL,
  priority INTEGER NOT NULL DEFAULT 0,
  not_before INTEGER NOT NULL DEFAULT 0,
  state TEXT NOT NULL,
  claimed_by TEXT,
  visible_at INTEGER NOT NULL DEFAULT 0,
  last_error TEXT,
  created_at INTEGER NOT NULL,
  CHECK(attempts <= max_attempts));
CREATE INDEX IF NOT EXISTS jobs_by_state ON jobs(state, priority, id);

CREATE TABLE IF NOT EXISTS periodic(
  name TEXT PRIMARY KEY,
  holder TEXT,
  expires_at INTEGER NOT NULL DEFAULT 0,
  last_fire INTEGER);

CREATE TABLE IF NOT EXISTS requests(
  id INTEGER PRIMARY KEY AUTOINCREMENT,
  kind TEXT NOT NULL,
  payload TEXT NOT NULL,
  contributor_id INTEGER REFERENCES contributors(id),
  created_at INTEGER NOT NULL);

CREATE TABLE IF NOT EXISTS maintenance(
  id INTEGER PRIMARY KEY AUTOINCREMENT,
  task TEXT NOT NULL,
  detail TEXT NOT NULL,
  at INTEGER NOT NULL);
)sql";

constexpr const char* kSiteCols =
    "id, name, description, country, state, district, locality, verbose_id, options, iqa_overrides, "
    "status, completed, archived, created_at, updated_at";
constexpr const char* kImageCols =
    "id, contribution_id, stored_path, byte_size, width, height, exif_present, source_hash, safety, "
    "label, iqa, created_at";
constexpr const char* kRunCols =
    "id, site_id, state, created_at, started_at, ended_at, image_ids, contribution_ids, stage_log, "
    "artifact_path, artifact_digest, raw_artifact_path, ark, error, report";
constexpr const char* kJobCols =
    "id, kind, payload, idem_key, attempts, max_attempts, priority, not_before, state, claimed_by, "
    "visible_at, last_error";
constexpr const char* kArkCols = "naan, shoulder, blade, check_char, run_id, target, metadata, created_at";

std::string cols(const char* c) { return std::string(c); }

SiteRecord read_site(const Stmt& s) {
  SiteRecord r;
  r.id = SiteId(s.i64(0));
  r.name = s.text(1);
  r.description = s.text(2);
  r.country = s.text(3);
  r.state = s.text(4);
  r.district = s.text(5);
  r.locality = s.text(6);
  r.verbose_id = s.text(7);
  r.recon_options = nlohmann::json::parse(s.text(8)).get<ReconOptions>();
  if (auto o = s.opt_text(9)) r.iqa_overrides = nlohmann::json::parse(*o).get<IqaThresholds>();
  r.status = parse_site_status(s.text(10));
  r.completed = s.i64(11) != 0;
  r.archived = s.i64(12) != 0;
  r.created_at = s.i64(13);
  r.updated_at = s.i64(14);
  return r;
}

ImageRecord read_image(const Stmt& s) {
  ImageRecord r;
  r.id = ImageId(s.i64(0));
  r.contribution_id = ContributionId(s.i64(1));
  r.stored_path = s.text(2);
  r.byte_size = s.i64(3);
  r.width = s.i32(4);
  r.height = s.i32(5);
  r.exif_present = s.i64(6) != 0;
  r.source_hash = s.text(7);
  r.safety = parse_safety_state(s.text(8));
  r.label = parse_image_label(s.text(9));
  if (auto iqa = s.opt_text(10)) r.iqa = nlohmann::json::parse(*iqa).get<IqaReport>();
  r.created_at = s.i64(11);
  return r;
}

RunRecord read_run(const Stmt& s) {
  RunRecord r;
  r.id = RunId(s.i64(0));
  r.site_id = SiteId(s.i64(1));
  r.state = parse_run_state(s.text(2));
  r.created_at = s.i64(3);
  r.started_at = s.opt_i64(4);
  r.ended_at = s.opt_i64(5);
  for (auto v : nlohmann::json::parse(s.text(6))) r.image_ids_used.emplace_back(v.get<std::int64_t>());
  for (auto v : nlohmann::json::parse(s.text(7))) r.contribution_ids_used.emplace_back(v.get<std::int64_t>());
  r.stage_log = nlohmann::json::parse(s.text(8)).get<std::vector<StageLogEntry>>();
  r.artifact_path = s.opt_text(9);
  r.artifact_digest = s.opt_text(10);
  r.raw_artifact_path = s.opt_text(11);
  r.ark = s.opt_text(12);
  r.error = s.opt_text(13);
  r.report = nlohmann::json::parse(s.text(14));
  return r;
}

JobEnvelope read_job(const Stmt& s) {
  JobEnvelope j;
  j.id = JobId(s.i64(0));
  j.kind = parse_job_kind(s.text(1));
  j.payload = s.text(2);
  j.idempotency_key = s.text(3);
  j.attempts = s.i32(4);
  j.max_attempts = s.i32(5);
  j.priority = s.i32(6);
  j.not_before = s.i64(7);
  j.state = parse_job_state(s.text(8));
  j.claimed_by = s.opt_text(9);
  j.visible_at = s.i64(10);
  j.last_error = s.opt_text(11);
  return j;
}

ArkRecord read_ark(const Stmt& s) {
  ArkRecord a;
  a.naan = s.text(0);
  a.shoulder = s.text(1);
  a.blade = s.text(2);
  auto c = s.text(3);
  a.check_char = c.empty() ? '0' : c[0];
  if (auto run = s.opt_i64(4)) a.run_id = RunId(*run);
  a.target = s.opt_text(5);
  a.metadata = s.text(6);
  a.created_at = s.i64(7);
  return a;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string ids_json(std::span<const ImageId> ids) {
  nlohmann::json arr = nlohmann::json::array();
  for (auto id : ids) arr.push_back(id.value);
  return arr.dump();
}

std::string ids_json(std::span<const ContributionId> ids) {
  nlohmann::json arr = nlohmann::json::array();
  for (auto id : ids) arr.push_back(id.value);
  return arr.dump();
}

bool is_site_completed_error(const Error& e) {
  return std::string_view(e.what()).find("SITE_COMPLETED") != std::string_view::npos;
}

}  // namespace

// --- transactions ---------------------------------------------------------

Store::WriteTx::WriteTx(Store& store) : store_(store), lock_(store.mutex_) {
  outer_ = store_.depth_ == 0;
  if (outer_) sql::exec(store_.db_, "BEGIN IMMEDIATE");
  ++store_.depth_;
}

Store::WriteTx::~WriteTx() {
  --store_.depth_;
  // an inner scope that unwinds leaves the decision to the outermost transaction
  if (outer_ && !done_) sqlite3_exec(store_.db_, "ROLLBACK", nullptr, nullptr, nullptr);
}

void Store::WriteTx::commit() {
  if (outer_) sql::exec(store_.db_, "COMMIT");
  done_ = true;
}

Store::ReadTx::ReadTx(const Store& store) : store_(store), lock_(store.mutex_) {
  outer_ = store_.depth_ == 0;
  if (outer_) sql::exec(store_.db_, "BEGIN");
  ++store_.depth_;
}

Store::ReadTx::~ReadTx() {
  --store_.depth_;
  if (outer_) sqlite3_exec(store_.db_, "COMMIT", nullptr, nullptr, nullptr);
}

// --- lifecycle -------------------------------------------------------------

Store::Store(const std::filesystem::path& path) {
  if (path != ":memory:" && path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  int flags = SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_FULLMUTEX;
  if (sqlite3_open_v2(path.c_str(), &db_, flags, nullptr) != SQLITE_OK) {
    std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
    sqlite3_close(db_);
    throw Error(ErrorCode::Storage, "cannot open store " + path.string() + ": " + msg);
  }
  sqlite3_busy_timeout(db_, 10'000);
  sql::exec(db_, "PRAGMA journal_mode=WAL");
  sql::exec(db_, "PRAGMA synchronous=FULL");
  sql::exec(db_, "PRAGMA foreign_keys=ON");
  migrate();
}

Store::~Store() { sqlite3_close(db_); }

void Store::migrate() {
  std::lock_guard lock(mutex_);
  sql::exec(db_, "BEGIN IMMEDIATE");
  try {
    sql::exec(db_, kSchema);
    sql::exec(db_, "COMMIT");
  } catch (...) {
    sqlite3_exec(db_, "ROLLBACK", nullptr, nullptr, nullptr);
    throw;
  }
}

bool Store::healthy() const {
  try {
    ReadTx tx(*this);
    Stmt s(db_, "SELECT 1");
    return s.step() && s.i64(0) == 1;
  } catch (const Error&) {
    return false;
  }
}

// --- sites -----------------------------------------------------------------

SiteRecord Store::create_site(const SiteInput& input, const ReconOptions& options, Timestamp now) {
  auto trimmed_empty = [](const std::string& s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
  };
  if (trimmed_empty(input.name)) throw Error(ErrorCode::Validation, "site name must not be empty");
  if (trimmed_empty(input.locality) && trimmed_empty(input.district) && trimmed_empty(input.state) &&
      trimmed_empty(input.country)) {
    throw Error(ErrorCode::Validation, "at least one location field is required");
  }
  options.validate();
  std::string base = make_verbose_id_base(input);
  if (base.empty()) base = "site";

  return transaction([&] {
    std::string verbose_id;
    for (int suffix = 1; suffix <= kMaxVerboseIdSuffix; ++suffix) {
      std::string candidate = suffix == 1 ? base : base + "_" + std::to_string(suffix);
      Stmt q(db_, "SELECT 1 FROM sites WHERE verbose_id = ?");
      q.bind(1, candidate);
      if (!q.step()) {
        verbose_id = candidate;
        break;
      }
    }
    if (verbose_id.empty()) {
      throw Error(ErrorCode::DuplicateVerboseId, "verbose id suffixes exhausted for " + base);
    }
    Stmt ins(db_,
             "INSERT INTO sites(name, description, country, state, district, locality, verbose_id, options, "
             "status, completed, archived, created_at, updated_at) VALUES (?,?,?,?,?,?,?,?,?,0,0,?,?)");
    ins.bind(1, input.name)
        .bind(2, input.description)
        .bind(3, input.country)
        .bind(4, input.state)
        .bind(5, input.district)
        .bind(6, input.locality)
        .bind(7, verbose_id)
        .bind(8, nlohmann::json(options).dump())
        .bind(9, to_string(SiteStatus::Live))
        .bind(10, now)
        .bind(11, now);
    ins.run();
    return get_site(SiteId(sqlite3_last_insert_rowid(db_)));
  });
}

std::optional<SiteRecord> Store::find_site(SiteId id) const {
  ReadTx tx(*this);
  Stmt s(db_, "SELECT " + cols(kSiteCols) + " FROM sites WHERE id = ?");
  s.bind(1, id.value);
  if (!s.step()) return std::nullopt;
  return read_site(s);
}

SiteRecord Store::get_site(SiteId id) const {
  auto site = find_site(id);
  if (!site) throw Error(ErrorCode::NotFound, "no site " + id.str());
  return *site;
}

std::optional<SiteRecord> Store::find_site_by_verbose_id(std::string_view verbose_id) const {
  ReadTx tx(*this);
  Stmt s(db_, "SELECT " + cols(kSiteCols) + " FROM sites WHERE verbose_id = ?");
  s.bind(1, verbose_id);
  if (!s.step()) return std::nullopt;
  return read_site(s);
}

std::vector<SiteRecord> Store::search_sites(std::string_view query) const {
  ReadTx tx(*this);
  // Matching happens here rather than with LIKE so '%' and '_' in queries are literal.
  Stmt s(db_, "SELECT " + cols(kSiteCols) + " FROM sites WHERE archived = 0 ORDER BY name ASC, id ASC");
  std::string needle = lower(query);
  std::vector<SiteRecord> out;
  while (s.step()) {
    SiteRecord site = read_site(s);
    if (needle.empty() || lower(site.verbose_id).find(needle) != std::string::npos ||
        lower(site.name).find(needle) != std::string::npos) {
      out.push_back(std::move(site));
    }
  }
  return out;
}

SiteRecord Store::complete_site(SiteId id, Timestamp now) {
  return transaction([&] {
    SiteRecord site = get_site(id);
    if (site.completed) throw Error(ErrorCode::Conflict, "site " + id.str() + " is already completed");
    Stmt u(db_, "UPDATE sites SET completed = 1, updated_at = ? WHERE id = ?");
    u.bind(1, now).bind(2, id.value).run();
    return get_site(id);
  });
}

SiteRecord Store::set_site_status(SiteId id, SiteStatus status, Timestamp now) {
  return transaction([&] {
    SiteRecord site = get_site(id);
    if (site.status == status) return site;
    if (!is_legal_site_transition(site.status, status)) {
      throw Error(ErrorCode::IllegalTransition, "site status " + std::string(to_string(site.status)) + " -> " +
                                                    std::string(to_string(status)));
    }
    Stmt u(db_, "UPDATE sites SET status = ?, updated_at = ? WHERE id = ?");
    u.bind(1, to_string(status)).bind(2, now).bind(3, id.value).run();
    return get_site(id);
  });
}

void Store::set_site_options(SiteId id, const ReconOptions& options, Timestamp now) {
  options.validate();
  transaction([&] {
    get_site(id);
    Stmt u(db_, "UPDATE sites SET options = ?, updated_at = ? WHERE id = ?");
    u.bind(1, nlohmann::json(options).dump()).bind(2, now).bind(3, id.value).run();
  });
}

void Store::set_site_iqa_overrides(SiteId id, const std::optional<IqaThresholds>& overrides, Timestamp now) {
  transaction([&] {
    get_site(id);
    Stmt u(db_, "UPDATE sites SET iqa_overrides = ?, updated_at = ? WHERE id = ?");
    if (overrides) u.bind(1, nlohmann::json(*overrides).dump());
    else u.bind_null(1);
    u.bind(2, now).bind(3, id.value).run();
  });
}

// --- contributors ------------------------------------------------------------

ContributorRecord Store::upsert_contributor(std::string_view email, std::string_view name) {
  if (email.empty()) throw Error(ErrorCode::Validation, "contributor email must not be empty");
  return transaction([&] {
    Stmt ins(db_,
             "INSERT INTO contributors(email, name) VALUES (?, ?) "
             "ON CONFLICT(email) DO UPDATE SET name = excluded.name");
    ins.bind(1, email).bind(2, name).run();
    return *find_contributor_by_email(email);
  });
}

std::optional<ContributorRecord> Store::find_contributor(ContributorId id) const {
  ReadTx tx(*this);
  Stmt s(db_, "SELECT id, email, name, banned, ban_reason FROM contributors WHERE id = ?");
  s.bind(1, id.value);
  if (!s.step()) return std::nullopt;
  return ContributorRecord{ContributorId(s.i64(0)), s.text(1), s.text(2), s.i64(3) != 0, s.opt_text(4)};
}

std::optional<ContributorRecord> Store::find_contributor_by_email(std::string_view email) const {
  ReadTx tx(*this);
  Stmt s(db_, "SELECT id, email, name, banned, ban_reason FROM contributors WHERE email = ?");
  s.bind(1, email);
  if (!s.step()) return std::nullopt;
  return ContributorRecord{ContributorId(s.i64(0)), s.text(1), s.text(2), s.i64(3) != 0, s.opt_text(4)};
}

void Store::ban_contributor(ContributorId id, std::string_view reason) {
  transaction([&] {
    Stmt u(db_, "UPDATE contributors SET banned = 1, ban_reason = ? WHERE id = ?");
    u.bind(1, reason).bind(2, id.value).run();
    if (sqlite3_changes(db_) == 0) throw Error(ErrorCode::NotFound, "no contributor " + id.str());
  });
}

// --- contributions -------------------------------------------------------------

ContributionId Store::open_contribution(SiteId site, ContributorId contributor, Timestamp now) {
  return transaction([&] {
    SiteRecord s = get_site(site);
    auto c = find_contributor(contributor);
    if (!c) throw Error(ErrorCode::NotFound, "no contributor " + contributor.str());
    if (c->banned) throw Error(ErrorCode::ContributorBanned, "contributor " + contributor.str() + " is banned");
    if (s.completed) throw Error(ErrorCode::SiteCompleted, "site " + site.str() + " no longer accepts contributions");
    try {
      Stmt ins(db_, "INSERT INTO contributions(site_id, contributor_id, submitted_at, upload_complete) VALUES (?,?,?,0)");
      ins.bind(1, site.value).bind(2, contributor.value).bind(3, now).run();
    } catch (const Error& e) {
      if (is_site_completed_error(e)) throw Error(ErrorCode::SiteCompleted, "site no longer accepts contributions");
      throw;
    }
    return ContributionId(sqlite3_last_insert_rowid(db_));
  });
}

ImageId Store::attach_image(ContributionId contribution, const ImageBlob& blob, Timestamp now) {
  return transaction([&] {
    Stmt q(db_, "SELECT upload_complete, (SELECT COUNT(*) FROM images WHERE contribution_id = ?1) "
                "FROM contributions WHERE id = ?1");
    q.bind(1, contribution.value);
    if (!q.step()) throw Error(ErrorCode::NotFound, "no contribution " + contribution.str());
    if (q.i64(0) != 0) throw Error(ErrorCode::Conflict, "contribution already finalized");
    std::int64_t ordinal = q.i64(1);
    Stmt ins(db_,
             "INSERT INTO images(contribution_id, ordinal, stored_path, byte_size, width, height, exif_present, "
             "source_hash, safety, label, created_at) VALUES (?,?,?,?,?,?,?,?,?,?,?)");
    ins.bind(1, contribution.value)
        .bind(2, ordinal)
        .bind(3, blob.stored_path)
        .bind(4, blob.byte_size)
        .bind(5, blob.width)
        .bind(6, blob.height)
        .bind(7, blob.exif_present)
        .bind(8, blob.source_hash)
        .bind(9, to_string(SafetyState::Pending))
        .bind(10, to_string(ImageLabel::Unlabeled))
        .bind(11, now);
    ins.run();
    return ImageId(sqlite3_last_insert_rowid(db_));
  });
}

ContributionRecord Store::finalize_contribution(ContributionId contribution, Timestamp now) {
  return transaction([&] {
    ContributionRecord rec = load_contribution(contribution);
    if (rec.upload_complete) return rec;
    if (rec.image_ids.empty()) throw Error(ErrorCode::EmptyContribution, "contribution has no images");
    try {
      Stmt u(db_, "UPDATE contributions SET upload_complete = 1, submitted_at = ? WHERE id = ?");
      u.bind(1, now).bind(2, contribution.value).run();
    } catch (const Error& e) {
      if (is_site_completed_error(e)) throw Error(ErrorCode::SiteCompleted, "site no longer accepts contributions");
      throw;
    }
    for (ImageId image : rec.image_ids) {
      EnqueueRequest job;
      job.kind = JobKind::PreprocessImage;
      job.payload = nlohmann::json{{"image_id", image.value}, {"phase", "screen"}}.dump();
      enqueue_locked(job, now);
    }
    return load_contribution(contribution);
  });
}

ContributionRecord Store::record_contribution(SiteId site, ContributorId contributor,
                                              std::span<const ImageBlob> images, Timestamp now) {
  return transaction([&] {
    ContributionId id = open_contribution(site, contributor, now);
    if (images.empty()) throw Error(ErrorCode::EmptyContribution, "a contribution needs at least one image");
    for (const auto& blob : images) attach_image(id, blob, now);
    return finalize_contribution(id, now);
  });
}

ContributionRecord Store::load_contribution(ContributionId id) const {
  ReadTx tx(*this);
  Stmt s(db_, "SELECT id, site_id, contributor_id, submitted_at, upload_complete FROM contributions WHERE id = ?");
  s.bind(1, id.value);
  if (!s.step()) throw Error(ErrorCode::NotFound, "no contribution " + id.str());
  ContributionRecord rec{ContributionId(s.i64(0)), SiteId(s.i64(1)), ContributorId(s.i64(2)), s.i64(3),
                         s.i64(4) != 0, {}};
  Stmt imgs(db_, "SELECT id FROM images WHERE contribution_id = ? ORDER BY ordinal, id");
  imgs.bind(1, id.value);
  while (imgs.step()) rec.image_ids.emplace_back(imgs.i64(0));
  return rec;
}

std::optional<ContributionRecord> Store::find_contribution(ContributionId id) const {
  try {
    return load_contribution(id);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::NotFound) return std::nullopt;
    throw;
  }
}

std::vector<ContributionRecord> Store::contributions_for_site(SiteId site) const {
  ReadTx tx(*this);
  Stmt s(db_, "SELECT id FROM contributions WHERE site_id = ? ORDER BY id");
  s.bind(1, site.value);
  std::vector<ContributionRecord> out;
  while (s.step()) out.push_back(load_contribution(ContributionId(s.i64(0))));
  return out;
}

// --- images ---------------------------------------------------------------------

std::optional<ImageRecord> Store::find_image(ImageId id) const {
  ReadTx tx(*this);
  Stmt s(db_, "SELECT " + cols(kImageCols) + " FROM images WHERE id = ?");
  s.bind(1, id.value);
  if (!s.step()) return std::nullopt;
  return read_image(s);
}

ImageRecord Store::get_image(ImageId id) const {
  auto img = find_image(id);
  if (!img) throw Error(ErrorCode::NotFound, "no image " + id.str());
  return *img;
}

SiteId Store::site_of_image(ImageId id) const {
  ReadTx tx(*this);
  Stmt s(db_, "SELECT c.site_id FROM images i JOIN contributions c ON c.id = i.contribution_id WHERE i.id = ?");
  s.bind(1, id.value);
  if (!s.step()) throw Error(ErrorCode::NotFound, "no image " + id.str());
  return SiteId(s.i64(0));
}

void Store::set_image_safety(ImageId id, SafetyState safety) {
  transaction([&] {
    ImageRecord img = get_image(id);
    // a label only stays valid while the image is SAFE
    ImageLabel label = safety == SafetyState::Safe ? img.label : ImageLabel::Unlabeled;
    Stmt u(db_, "UPDATE images SET safety = ?, label = ? WHERE id = ?");
    u.bind(1, to_string(safety)).bind(2, to_string(label)).bind(3, id.value).run();
  });
}

void Store::set_image_assessment(ImageId id, ImageLabel label, const IqaReport& report) {
  transaction([&] {
    ImageRecord img = get_image(id);
    if (label == ImageLabel::Good && img.safety != SafetyState::Safe) {
      throw Error(ErrorCode::Validation, "only SAFE images can be labeled GOOD");
    }
    Stmt u(db_, "UPDATE images SET label = ?, iqa = ? WHERE id = ?");
    u.bind(1, to_string(label)).bind(2, nlohmann::json(report).dump()).bind(3, id.value).run();
  });
}

std::vector<ImageRecord> Store::images_for_site(SiteId site) const {
  ReadTx tx(*this);
  Stmt s(db_, "SELECT i.id, i.contribution_id, i.stored_path, i.byte_size, i.width, i.height, i.exif_present, "
              "i.source_hash, i.safety, i.label, i.iqa, i.created_at FROM images i "
              "JOIN contributions c ON c.id = i.contribution_id WHERE c.site_id = ? ORDER BY i.id");
  s.bind(1, site.value);
  std::vector<ImageRecord> out;
  while (s.step()) out.push_back(read_image(s));
  return out;
}

std::vector<ImageRecord> Store::moderation_queue() const {
  ReadTx tx(*this);
  Stmt s(db_, "SELECT " + cols(kImageCols) + " FROM images WHERE safety = 'MODERATION' ORDER BY id");
  std::vector<ImageRecord> out;
  while (s.step()) out.push_back(read_image(s));
  return out;
}

std::vector<std::string> Store::prune_stale_pending(Timestamp cutoff) {
  return transaction([&] {
    std::vector<std::string> paths;
    Stmt q(db_, "SELECT i.id, i.stored_path FROM images i JOIN contributions c ON c.id = i.contribution_id "
                "WHERE i.safety = 'PENDING' AND c.upload_complete = 0 AND i.created_at < ?");
    q.bind(1, cutoff);
    std::vector<std::int64_t> ids;
    while (q.step()) {
      ids.push_back(q.i64(0));
      paths.push_back(q.text(1));
    }
    for (auto id : ids) {
      Stmt d(db_, "DELETE FROM images WHERE id = ?");
      d.bind(1, id).run();
    }
    // drop the abandoned contribution shells as well so no contribution is left without images
    Stmt d(db_, "DELETE FROM contributions WHERE upload_complete = 0 AND submitted_at < ? AND "
                "NOT EXISTS (SELECT 1 FROM images WHERE contribution_id = contributions.id)");
    d.bind(1, cutoff).run();
    return paths;
  });
}

// --- runs --------------------------------------------------------------------------

RunRecord Store::create_run(SiteId site, Timestamp now) {
  return transaction([&] {
    get_site(site);
    Stmt q(db_, "SELECT id FROM runs WHERE site_id = ? AND state IN "
                "('QUEUED','PREPROCESSING','RECONSTRUCTING','POSTPROCESSING')");
    q.bind(1, site.value);
    if (q.step()) {
      throw Error(ErrorCode::Conflict, "site " + site.str() + " already has active run " + std::to_string(q.i64(0)));
    }
    Stmt ins(db_, "INSERT INTO runs(site_id, state, created_at) VALUES (?, 'QUEUED', ?)");
    ins.bind(1, site.value).bind(2, now).run();
    return get_run(RunId(sqlite3_last_insert_rowid(db_)));
  });
}

std::optional<RunRecord> Store::find_run(RunId id) const {
  ReadTx tx(*this);
  Stmt s(db_, "SELECT " + cols(kRunCols) + " FROM runs WHERE id = ?");
  s.bind(1, id.value);
  if (!s.step()) return std::nullopt;
  return read_run(s);
}

RunRecord Store::get_run(RunId id) const {
  auto run = find_run(id);
  if (!run) throw Error(ErrorCode::NotFound, "no run " + id.str());
  return *run;
}

std::vector<RunRecord> Store::runs_for_site(SiteId site) const {
  ReadTx tx(*this);
  Stmt s(db_, "SELECT " + cols(kRunCols) + " FROM runs WHERE site_id = ? ORDER BY id");
  s.bind(1, site.value);
  std::vector<RunRecord> out;
  while (s.step()) out.push_back(read_run(s));
  return out;
}

std::vector<RunRecord> Store::list_runs() const {
  ReadTx tx(*this);
  Stmt s(db_, "SELECT " + cols(kRunCols) + " FROM runs ORDER BY id");
  std::vector<RunRecord> out;
  while (s.step()) out.push_back(read_run(s));
  return out;
}

std::optional<RunRecord> Store::latest_published_run(SiteId site) const {
  ReadTx tx(*this);
  Stmt s(db_, "SELECT " + cols(kRunCols) +
                  " FROM runs WHERE site_id = ? AND state = 'PUBLISHED' ORDER BY ended_at DESC, id DESC LIMIT 1");
  s.bind(1, site.value);
  if (!s.step()) return std::nullopt;
  return read_run(s);
}

std::vector<RunRecord> Store::active_runs() const {
  ReadTx tx(*this);
  Stmt s(db_, "SELECT " + cols(kRunCols) +
                  " FROM runs WHERE state IN ('QUEUED','PREPROCESSING','RECONSTRUCTING','POSTPROCESSING') ORDER BY id");
  std::vector<RunRecord> out;
  while (s.step()) out.push_back(read_run(s));
  return out;
}

void Store::write_run_log(RunId id, const std::vector<StageLogEntry>& log) {
  Stmt u(db_, "UPDATE runs SET stage_log = ? WHERE id = ?");
  u.bind(1, nlohmann::json(log).dump()).bind(2, id.value).run();
}

RunRecord Store::transition_locked(RunId id, RunState to, RunEvent event, std::string_view message, Timestamp now) {
  RunRecord run = get_run(id);
  auto next = next_run_state(run.state, event);
  if (!next || *next != to) {
    throw Error(ErrorCode::IllegalTransition, "run " + id.str() + ": " + std::string(to_string(run.state)) + " + " +
                                                  std::string(to_string(event)) + " is not allowed");
  }
  run.stage_log.push_back(
      StageLogEntry{StageEntryKind::Transition, std::string(to_string(to)), "TRANSITION", 0, std::string(message), now});
  Stmt u(db_, "UPDATE runs SET state = ?, stage_log = ? WHERE id = ?");
  u.bind(1, to_string(to)).bind(2, nlohmann::json(run.stage_log).dump()).bind(3, id.value).run();
  if (event == RunEvent::StartPreprocess) {
    Stmt t(db_, "UPDATE runs SET started_at = ? WHERE id = ?");
    t.bind(1, now).bind(2, id.value).run();
  }
  if (to == RunState::Published || to == RunState::Failed) {
    Stmt t(db_, "UPDATE runs SET ended_at = ?, lease_holder = NULL, lease_expires = 0 WHERE id = ?");
    t.bind(1, now).bind(2, id.value).run();
  }
  if (to == RunState::Failed) {
    Stmt t(db_, "UPDATE runs SET error = ? WHERE id = ?");
    t.bind(1, message).bind(2, id.value).run();
  }
  return get_run(id);
}

RunRecord Store::transition_run(RunId id, RunEvent event, std::string_view message, Timestamp now) {
  return transaction([&] {
    RunRecord run = get_run(id);
    auto next = next_run_state(run.state, event);
    if (!next) {
      throw Error(ErrorCode::IllegalTransition, "run " + id.str() + ": " + std::string(to_string(run.state)) +
                                                    " + " + std::string(to_string(event)) + " is not allowed");
    }
    if (*next == RunState::Published && (!run.ark || !run.artifact_path)) {
      throw Error(ErrorCode::IllegalTransition, "publishing requires an artifact and an ark");
    }
    return transition_locked(id, *next, event, message, now);
  });
}

RunRecord Store::publish_run(RunId id, const PublishInfo& info, Timestamp now) {
  return transaction([&] {
    RunRecord run = get_run(id);
    if (run.state != RunState::Postprocessing) {
      throw Error(ErrorCode::IllegalTransition, "run " + id.str() + " cannot publish from " +
                                                    std::string(to_string(run.state)));
    }
    Stmt u(db_, "UPDATE runs SET state = 'PUBLISHED', artifact_path = ?, artifact_digest = ?, "
                "raw_artifact_path = ?, ark = ? WHERE id = ?");
    u.bind(1, info.artifact_path)
        .bind(2, info.artifact_digest)
        .bind(3, info.raw_artifact_path)
        .bind(4, info.ark)
        .bind(5, id.value);
    u.run();
    run = get_run(id);
    run.stage_log.push_back(StageLogEntry{StageEntryKind::Transition, "PUBLISHED", "TRANSITION", 0, "", now});
    write_run_log(id, run.stage_log);
    Stmt t(db_, "UPDATE runs SET ended_at = ?, lease_holder = NULL, lease_expires = 0 WHERE id = ?");
    t.bind(1, now).bind(2, id.value).run();
    if (!info.report.is_null()) merge_run_report(id, info.report);
    return get_run(id);
  });
}

void Store::set_run_inputs(RunId id, std::span<const ImageId> images, std::span<const ContributionId> contributions) {
  transaction([&] {
    Stmt u(db_, "UPDATE runs SET image_ids = ?, contribution_ids = ? WHERE id = ?");
    u.bind(1, ids_json(images)).bind(2, ids_json(contributions)).bind(3, id.value).run();
    if (sqlite3_changes(db_) == 0) throw Error(ErrorCode::NotFound, "no run " + id.str());
  });
}

void Store::append_stage_entry(RunId id, const StageLogEntry& entry) {
  transaction([&] {
    RunRecord run = get_run(id);
    run.stage_log.push_back(entry);
    write_run_log(id, run.stage_log);
  });
}

void Store::merge_run_report(RunId id, const nlohmann::json& patch) {
  transaction([&] {
    RunRecord run = get_run(id);
    nlohmann::json report = run.report.is_object() ? run.report : nlohmann::json::object();
    report.merge_patch(patch);
    Stmt u(db_, "UPDATE runs SET report = ? WHERE id = ?");
    u.bind(1, report.dump()).bind(2, id.value).run();
  });
}

void Store::relocate_artifact(RunId id, std::string_view new_path) {
  transaction([&] {
    Stmt u(db_, "UPDATE runs SET artifact_path = ? WHERE id = ?");
    u.bind(1, new_path).bind(2, id.value).run();
  });
}

bool Store::try_acquire_run_lease(RunId id, std::string_view holder, Timestamp now, Timestamp until) {
  return transaction([&] {
    Stmt q(db_, "SELECT lease_holder, lease_expires FROM runs WHERE id = ?");
    q.bind(1, id.value);
    if (!q.step()) throw Error(ErrorCode::NotFound, "no run " + id.str());
    auto current = q.opt_text(0);
    Timestamp expires = q.i64(1);
    if (current && *current != holder && expires > now) return false;
    Stmt u(db_, "UPDATE runs SET lease_holder = ?, lease_expires = ? WHERE id = ?");
    u.bind(1, holder).bind(2, until).bind(3, id.value).run();
    return true;
  });
}

void Store::release_run_lease(RunId id, std::string_view holder) {
  transaction([&] {
    Stmt u(db_, "UPDATE runs SET lease_holder = NULL, lease_expires = 0 WHERE id = ? AND lease_holder = ?");
    u.bind(1, id.value).bind(2, holder).run();
  });
}

Store::RunLease Store::run_lease(RunId id) const {
  ReadTx tx(*this);
  Stmt q(db_, "SELECT lease_holder, lease_expires FROM runs WHERE id = ?");
  q.bind(1, id.value);
  if (!q.step()) throw Error(ErrorCode::NotFound, "no run " + id.str());
  return RunLease{q.opt_text(0), q.i64(1)};
}

// --- arks ---------------------------------------------------------------------------

bool Store::try_insert_ark(const ArkRecord& ark) {
  return transaction([&] {
    Stmt ins(db_, "INSERT OR IGNORE INTO arks(naan, name, shoulder, blade, check_char, run_id, target, metadata, "
                  "created_at) VALUES (?,?,?,?,?,?,?,?,?)");
    ins.bind(1, ark.naan)
        .bind(2, ark.name())
        .bind(3, ark.shoulder)
        .bind(4, ark.blade)
        .bind(5, std::string(1, ark.check_char));
    if (ark.run_id) ins.bind(6, ark.run_id->value);
    else ins.bind_null(6);
    ins.bind(7, ark.target).bind(8, ark.metadata).bind(9, ark.created_at);
    ins.run();
    return sqlite3_changes(db_) == 1;
  });
}

std::optional<ArkRecord> Store::find_ark(std::string_view naan, std::string_view name) const {
  ReadTx tx(*this);
  Stmt s(db_, "SELECT " + cols(kArkCols) + " FROM arks WHERE naan = ? AND name = ?");
  s.bind(1, naan).bind(2, name);
  if (!s.step()) return std::nullopt;
  return read_ark(s);
}

std::optional<ArkRecord> Store::find_ark_for_run(RunId run) const {
  ReadTx tx(*this);
  Stmt s(db_, "SELECT " + cols(kArkCols) + " FROM arks WHERE run_id = ?");
  s.bind(1, run.value);
  if (!s.step()) return std::nullopt;
  return read_ark(s);
}

void Store::attach_ark_to_run(std::string_view naan, std::string_view name, RunId run) {
  transaction([&] {
    auto ark = find_ark(naan, name);
    if (!ark) throw Error(ErrorCode::UnknownArk, "unknown ark " + std::string(name));
    if (ark->run_id && *ark->run_id != run) throw Error(ErrorCode::AlreadyBound, "ark belongs to another run");
    Stmt u(db_, "UPDATE arks SET run_id = ? WHERE naan = ? AND name = ?");
    u.bind(1, run.value).bind(2, naan).bind(3, name).run();
  });
}

void Store::bind_ark(std::string_view naan, std::string_view name, std::string_view target, std::string_view metadata) {
  transaction([&] {
    auto ark = find_ark(naan, name);
    if (!ark) throw Error(ErrorCode::UnknownArk, "unknown ark " + std::string(name));
    if (ark->target && *ark->target != target) {
      throw Error(ErrorCode::AlreadyBound, "ark " + std::string(name) + " is already bound to " + *ark->target);
    }
    Stmt u(db_, "UPDATE arks SET target = ?, metadata = ? WHERE naan = ? AND name = ?");
    u.bind(1, target).bind(2, metadata).bind(3, naan).bind(4, name).run();
  });
}

void Store::update_ark_metadata(std::string_view naan, std::string_view name, std::string_view metadata) {
  transaction([&] {
    Stmt u(db_, "UPDATE arks SET metadata = ? WHERE naan = ? AND name = ?");
    u.bind(1, metadata).bind(2, naan).bind(3, name).run();
    if (sqlite3_changes(db_) == 0) throw Error(ErrorCode::UnknownArk, "unknown ark " + std::string(name));
  });
}

std::size_t Store::ark_count() const {
  ReadTx tx(*this);
  Stmt s(db_, "SELECT COUNT(*) FROM arks");
  s.step();
  return static_cast<std::size_t>(s.i64(0));
}

// --- jobs -------------------------------------------------------------------------------

JobEnvelope Store::enqueue_locked(const EnqueueRequest& request, Timestamp now) {
  std::string key = idempotency_key(request.kind, request.payload);
  {
    Stmt q(db_, "SELECT " + cols(kJobCols) + " FROM jobs WHERE idem_key = ?");
    q.bind(1, key);
    if (q.step()) return read_job(q);
  }
  Stmt ins(db_, "INSERT INTO jobs(kind, payload, idem_key, attempts, max_attempts, priority, not_before, state, "
                "visible_at, created_at) VALUES (?,?,?,0,?,?,?,'READY',0,?)");
  ins.bind(1, to_string(request.kind))
      .bind(2, request.payload)
      .bind(3, key)
      .bind(4, std::max(1, request.max_attempts))
      .bind(5, request.priority)
      .bind(6, request.not_before)
      .bind(7, now);
  ins.run();
  return *find_job(JobId(sqlite3_last_insert_rowid(db_)));
}

JobEnvelope Store::enqueue_job(const EnqueueRequest& request, Timestamp now) {
  return transaction([&] { return enqueue_locked(request, now); });
}

std::optional<JobEnvelope> Store::claim_job(std::string_view worker, Timestamp now, Timestamp visibility) {
  return transaction([&]() -> std::optional<JobEnvelope> {
    for (;;) {
      Stmt q(db_, "SELECT " + cols(kJobCols) +
                      " FROM jobs WHERE (state = 'READY' AND not_before <= ?1) OR (state = 'CLAIMED' AND visible_at <= ?1) "
                      "ORDER BY priority DESC, id ASC LIMIT 1");
      q.bind(1, now);
      if (!q.step()) return std::nullopt;
      JobEnvelope job = read_job(q);
      if (job.attempts >= job.max_attempts) {
        Stmt dead(db_, "UPDATE jobs SET state = 'DEAD', claimed_by = NULL, "
                       "last_error = COALESCE(last_error, 'visibility timeout with attempts exhausted') WHERE id = ?");
        dead.bind(1, job.id.value).run();
        continue;
      }
      Stmt u(db_, "UPDATE jobs SET state = 'CLAIMED', attempts = attempts + 1, claimed_by = ?, visible_at = ? "
                  "WHERE id = ?");
      u.bind(1, worker).bind(2, now + visibility).bind(3, job.id.value).run();
      return find_job(job.id);
    }
  });
}

bool Store::ack_job(JobId id, std::string_view worker) {
  return transaction([&] {
    Stmt u(db_, "UPDATE jobs SET state = 'DONE' WHERE id = ? AND state = 'CLAIMED' AND claimed_by = ?");
    u.bind(1, id.value).bind(2, worker).run();
    return sqlite3_changes(db_) == 1;
  });
}

bool Store::nack_job(JobId id, std::string_view worker, Timestamp now, Timestamp delay, std::string_view error,
                     bool count_attempt) {
  return transaction([&] {
    auto job = find_job(id);
    if (!job || job->state != JobState::Claimed || job->claimed_by != std::string(worker)) return false;
    if (count_attempt && job->attempts >= job->max_attempts) {
      Stmt u(db_, "UPDATE jobs SET state = 'DEAD', claimed_by = NULL, last_error = ? WHERE id = ?");
      u.bind(1, error).bind(2, id.value).run();
      return true;
    }
    Stmt u(db_, "UPDATE jobs SET state = 'READY', claimed_by = NULL, not_before = ?, last_error = ?, "
                "attempts = attempts - ? WHERE id = ?");
    u.bind(1, now + delay).bind(2, error).bind(3, count_attempt ? 0 : 1).bind(4, id.value).run();
    return true;
  });
}

std::optional<JobEnvelope> Store::find_job(JobId id) const {
  ReadTx tx(*this);
  Stmt s(db_, "SELECT " + cols(kJobCols) + " FROM jobs WHERE id = ?");
  s.bind(1, id.value);
  if (!s.step()) return std::nullopt;
  return read_job(s);
}

std::optional<JobEnvelope> Store::find_job_by_key(std::string_view key) const {
  ReadTx tx(*this);
  Stmt s(db_, "SELECT " + cols(kJobCols) + " FROM jobs WHERE idem_key = ?");
  s.bind(1, key);
  if (!s.step()) return std::nullopt;
  return read_job(s);
}

std::string Store::idempotency_key(JobKind kind, std::string_view payload) {
  return std::string(to_string(kind)) + ":" + sha256_hex(payload);
}

std::vector<JobEnvelope> Store::list_jobs() const {
  ReadTx tx(*this);
  Stmt s(db_, "SELECT " + cols(kJobCols) + " FROM jobs ORDER BY id");
  std::vector<JobEnvelope> out;
  while (s.step()) out.push_back(read_job(s));
  return out;
}

std::vector<JobEnvelope> Store::dead_letters() const {
  ReadTx tx(*this);
  Stmt s(db_, "SELECT " + cols(kJobCols) + " FROM jobs WHERE state = 'DEAD' ORDER BY id");
  std::vector<JobEnvelope> out;
  while (s.step()) out.push_back(read_job(s));
  return out;
}

std::size_t Store::queue_depth() const {
  ReadTx tx(*this);
  Stmt s(db_, "SELECT COUNT(*) FROM jobs WHERE state IN ('READY', 'CLAIMED')");
  s.step();
  return static_cast<std::size_t>(s.i64(0));
}

// --- periodic ------------------------------------------------------------------------------

bool Store::try_fire_periodic(std::string_view name, std::string_view holder, Timestamp now, Timestamp interval) {
  return transaction([&] {
    Stmt q(db_, "SELECT holder, expires_at, last_fire FROM periodic WHERE name = ?");
    q.bind(1, name);
    if (q.step()) {
      auto current = q.opt_text(0);
      Timestamp expires = q.i64(1);
      auto last_fire = q.opt_i64(2);
      if (current && *current != holder && expires > now) return false;
      if (last_fire && *last_fire + interval > now) return false;
    }
    Stmt u(db_, "INSERT INTO periodic(name, holder, expires_at, last_fire) VALUES (?1, ?2, ?3, ?4) "
                "ON CONFLICT(name) DO UPDATE SET holder = ?2, expires_at = ?3, last_fire = ?4");
    u.bind(1, name).bind(2, holder).bind(3, now + 2 * interval).bind(4, now).run();
    return true;
  });
}

// --- requests / maintenance ---------------------------------------------------------------------

std::int64_t Store::insert_request(std::string_view kind, const nlohmann::json& payload,
                                   std::optional<ContributorId> contributor, Timestamp now) {
  return transaction([&] {
    Stmt ins(db_, "INSERT INTO requests(kind, payload, contributor_id, created_at) VALUES (?,?,?,?)");
    ins.bind(1, kind).bind(2, payload.dump());
    if (contributor) ins.bind(3, contributor->value);
    else ins.bind_null(3);
    ins.bind(4, now).run();
    return static_cast<std::int64_t>(sqlite3_last_insert_rowid(db_));
  });
}

std::vector<ServiceRequest> Store::list_requests() const {
  ReadTx tx(*this);
  Stmt s(db_, "SELECT id, kind, payload, contributor_id, created_at FROM requests ORDER BY id");
  std::vector<ServiceRequest> out;
  while (s.step()) {
    ServiceRequest r;
    r.id = s.i64(0);
    r.kind = s.text(1);
    r.payload = nlohmann::json::parse(s.text(2));
    if (auto c = s.opt_i64(3)) r.contributor_id = ContributorId(*c);
    r.created_at = s.i64(4);
    out.push_back(std::move(r));
  }
  return out;
}

void Store::log_maintenance(std::string_view task, const nlohmann::json& detail, Timestamp now) {
  transaction([&] {
    Stmt ins(db_, "INSERT INTO maintenance(task, detail, at) VALUES (?,?,?)");
    ins.bind(1, task).bind(2, detail.dump()).bind(3, now).run();
  });
}

std::vector<MaintenanceEntry> Store::maintenance_log() const {
  ReadTx tx(*this);
  Stmt s(db_, "SELECT id, task, detail, at FROM maintenance ORDER BY id");
  std::vector<MaintenanceEntry> out;
  while (s.step()) out.push_back(MaintenanceEntry{s.i64(0), s.text(1), nlohmann::json::parse(s.text(2)), s.i64(3)});
  return out;
}

nlohmann::json Store::export_json(bool include_jobs) const {
  ReadTx tx(*this);
  nlohmann::json doc;
  auto table_rows = [&](const std::string& table, const std::string& order) {
    nlohmann::json rows = nlohmann::json::array();
    sqlite3_stmt* stmt = nullptr;
    std::string text = "SELECT * FROM " + table + " ORDER BY " + order;
    if (sqlite3_prepare_v2(db_, text.c_str(), -1, &stmt, nullptr) != SQLITE_OK) {
      throw Error(ErrorCode::Storage, sqlite3_errmsg(db_));
    }
    while (sqlite3_step(stmt) == SQLITE_ROW) {
      nlohmann::json row = nlohmann::json::object();
      int n = sqlite3_column_count(stmt);
      for (int c = 0; c < n; ++c) {
        const char* col = sqlite3_column_name(stmt, c);
        switch (sqlite3_column_type(stmt, c)) {
          case SQLITE_INTEGER: row[col] = sqlite3_column_int64(stmt, c); break;
          case SQLITE_FLOAT: row[col] = sqlite3_column_double(stmt, c); break;
          case SQLITE_NULL: row[col] = nullptr; break;
          default:
            row[col] = std::string(reinterpret_cast<const char*>(sqlite3_column_text(stmt, c)),
                                   sqlite3_column_bytes(stmt, c));
        }
      }
      rows.push_back(std::move(row));
    }
    sqlite3_finalize(stmt);
    return rows;
  };

  doc["sites"] = table_rows("sites", "id");
  doc["contributors"] = table_rows("contributors", "id");
  doc["contributions"] = table_rows("contributions", "id");
  doc["images"] = table_rows("images", "id");
  doc["runs"] = table_rows("runs", "id");
  doc["arks"] = table_rows("arks", "naan, name");
  doc["requests"] = table_rows("requests", "id");
  if (include_jobs) {
    doc["jobs"] = table_rows("jobs", "id");
    doc["maintenance"] = table_rows("maintenance", "id");
  }
  return doc;
}

}  // namespace tirtha
