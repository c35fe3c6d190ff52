#include "tirtha/orchestrator/executor.hpp"

#include <algorithm>
#include <chrono>
#include <set>

#include "tirtha/ark/ark.hpp"
#include "tirtha/common/digest.hpp"
#include "tirtha/common/error.hpp"
#include "tirtha/common/io.hpp"
#include "tirtha/mesh/glb.hpp"
#include "tirtha/mesh/obj.hpp"
#include "tirtha/mesh/report.hpp"
#include "tirtha/orchestrator/plan.hpp"
#include "tirtha/orchestrator/preprocess.hpp"
#include "tirtha/orchestrator/queue.hpp"

namespace tirtha::orchestrator {

namespace {

constexpr const char* kInputsDir = "00_inputs";

std::uint64_t os_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

std::int64_t elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - since).count();
}

std::uint64_t mesh_bundle_bytes(const fs::path& dir) {
  std::uint64_t total = 0;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    auto ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
    if (ext == ".obj" || ext == ".mtl" || ext == ".jpg" || ext == ".jpeg" || ext == ".png") total += entry.file_size();
  }
  return total;
}

bool logged_ok(const RunRecord& run, std::string_view stage) {
  for (const auto& e : run.stage_log) {
    if (e.kind == StageEntryKind::Stage && e.name == stage && e.status == "OK") return true;
  }
  return false;
}

}  // namespace

ExecutorSettings ExecutorSettings::from_config(const Config& config) {
  ExecutorSettings s;
  s.min_images = static_cast<int>(config.get_int("run.min_images", s.min_images));
  s.seed = static_cast<std::uint64_t>(config.get_int("run.seed", static_cast<std::int64_t>(s.seed)));
  s.lease = QueuePolicy::from_config(config).visibility_timeout;
  s.naan = config.get_string("ark.naan", s.naan);
  s.shoulder = config.get_string("ark.shoulder", s.shoulder);
  s.license = config.get_string("ark.license", s.license);
  if (config.contains("ark.seed")) s.ark_seed = static_cast<std::uint64_t>(config.get_int("ark.seed", 0));
  s.quantize = config.get_bool("mesh.quantize", s.quantize);
  if (s.min_images < 1) throw Error(ErrorCode::Validation, "run.min_images must be at least 1");
  return s;
}

RunExecutor::RunExecutor(Store& store, BlobStore& blobs, Backend& backend, Clock& clock, ExecutorSettings settings)
    : store_(store),
      blobs_(blobs),
      backend_(backend),
      clock_(clock),
      settings_(std::move(settings)),
      ark_rng_(settings_.ark_seed.value_or(os_seed())) {}

void RunExecutor::renew(RunId run, const std::string& holder) {
  Timestamp now = clock_.now();
  if (!store_.try_acquire_run_lease(run, holder, now, now + settings_.lease)) {
    throw Error(ErrorCode::RunBusy, "run " + run.str() + " lease taken over by another worker");
  }
}

RunRecord RunExecutor::execute(RunId id, const std::string& holder, bool final_attempt) {
  RunRecord run = store_.get_run(id);
  if (is_terminal(run.state)) return run;
  renew(id, holder);
  try {
    run = store_.get_run(id);
    if (run.state == RunState::Queued) run = start(run);
    if (run.state == RunState::Preprocessing) run = preprocess(run);
    if (run.state == RunState::Reconstructing) run = reconstruct(run, holder, final_attempt);
    if (run.state == RunState::Postprocessing) {
      renew(id, holder);
      run = postprocess(run);
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Timeout && !final_attempt) throw;
    if (e.code() == ErrorCode::RunBusy) throw;
    run = store_.get_run(id);
    if (!is_terminal(run.state)) run = fail(id, std::string(to_string(e.code())) + ": " + e.what());
    return run;
  }
  store_.release_run_lease(id, holder);
  return store_.get_run(id);
}

RunRecord RunExecutor::start(RunRecord run) {
  Timestamp now = clock_.now();
  SiteRecord site = store_.get_site(run.site_id);
  std::vector<ImageId> images;
  std::set<std::int64_t> contributions;
  for (const auto& img : store_.images_for_site(run.site_id)) {
    if (img.label != ImageLabel::Good || img.safety != SafetyState::Safe) continue;
    images.push_back(img.id);
    contributions.insert(img.contribution_id.value);
  }
  if (static_cast<int>(images.size()) < settings_.min_images) {
    return store_.transition_run(run.id, RunEvent::Fail,
                                 "INSUFFICIENT_INPUT: " + std::to_string(images.size()) + " GOOD images, need " +
                                     std::to_string(settings_.min_images),
                                 now);
  }
  StagePlan plan = plan_stages(site);
  backend_.check(plan);
  std::vector<ContributionId> contribution_ids;
  for (auto c : contributions) contribution_ids.emplace_back(c);
  return store_.transaction([&] {
    store_.set_run_inputs(run.id, images, contribution_ids);
    store_.merge_run_report(run.id, {{"plan", plan.to_json()}, {"backend", backend_.kind()}, {"seed", settings_.seed}});
    store_.set_site_status(run.site_id, SiteStatus::Processing, now);
    return store_.transition_run(run.id, RunEvent::StartPreprocess, "", now);
  });
}

RunRecord RunExecutor::preprocess(RunRecord run) {
  fs::path inputs = blobs_.run_dir(run.id) / kInputsDir;
  fs::create_directories(inputs);
  for (ImageId id : run.image_ids_used) {
    ImageRecord img = store_.get_image(id);
    // input assembly is the last line of defence for the safety gate
    if (img.safety != SafetyState::Safe || img.label != ImageLabel::Good) {
      throw Error(ErrorCode::Validation, "image " + id.str() + " is not SAFE and GOOD");
    }
    fs::path dst = inputs / (img.source_hash + ".jpg");
    if (!fs::exists(dst)) {
      fs::path tmp = dst;
      tmp += ".part";
      fs::copy_file(img.stored_path, tmp, fs::copy_options::overwrite_existing);
      fs::rename(tmp, dst);
    }
  }
  return store_.transition_run(run.id, RunEvent::StartReconstruct, "", clock_.now());
}

RunRecord RunExecutor::reconstruct(RunRecord run, const std::string& holder, bool final_attempt) {
  StagePlan plan = StagePlan::from_json(run.report.at("plan"));
  fs::path inputs = blobs_.run_dir(run.id) / kInputsDir;

  std::vector<std::string> digests;
  for (ImageId id : run.image_ids_used) digests.push_back(store_.get_image(id).source_hash);
  std::sort(digests.begin(), digests.end());

  fs::path previous = inputs;
  std::size_t index = 0;
  for (const auto& stage : plan.stages) {
    if (!stage.enabled) continue;
    ++index;
    fs::path out = blobs_.stage_dir(run.id, index, stage.name);
    if (logged_ok(run, stage.name) && fs::exists(out)) {
      previous = out;
      continue;
    }
    renew(run.id, holder);

    fs::path tmp = out;
    tmp += ".tmp";
    fs::remove_all(tmp);
    fs::remove_all(out);
    fs::create_directories(tmp);

    StageInput input{&stage, inputs, previous, tmp, digests, settings_.seed};
    auto began = std::chrono::steady_clock::now();
    StageOutcome outcome;
    try {
      outcome = backend_.run_stage(input);
    } catch (const Error& e) {
      bool terminal = e.code() != ErrorCode::Timeout || final_attempt;
      if (terminal) {
        store_.append_stage_entry(run.id, {StageEntryKind::Stage, stage.name, "FAILED", elapsed_ms(began),
                                           e.what(), clock_.now()});
        std::string code = e.code() == ErrorCode::Timeout ? "TIMEOUT" : "STAGE_FAILED";
        return fail(run.id, code + "(" + stage.name + "): " + e.what());
      }
      throw;
    }
    fs::rename(tmp, out);
    store_.transaction([&] {
      store_.append_stage_entry(run.id, {StageEntryKind::Stage, stage.name, "OK", elapsed_ms(began), "", clock_.now()});
      if (!outcome.report.empty()) store_.merge_run_report(run.id, {{"stages", {{stage.name, outcome.report}}}});
      if (outcome.report.contains("registered_views")) {
        store_.merge_run_report(run.id, {{"registered_views", outcome.report["registered_views"]},
                                         {"total_views", outcome.report.value("total_views", digests.size())}});
      }
    });
    previous = out;
  }
  return store_.transition_run(run.id, RunEvent::StartPostprocess, "", clock_.now());
}

RunRecord RunExecutor::postprocess(RunRecord run) {
  StagePlan plan = StagePlan::from_json(run.report.at("plan"));
  SiteRecord site = store_.get_site(run.site_id);

  std::size_t index = 0;
  fs::path texturing;
  for (const auto& stage : plan.stages) {
    if (!stage.enabled) continue;
    ++index;
    if (stage.name == "Texturing") texturing = blobs_.stage_dir(run.id, index, stage.name);
  }
  if (texturing.empty()) throw Error(ErrorCode::StageFailed, "plan has no Texturing stage");

  fs::path obj = find_mesh(texturing);
  mesh::TriangleMesh raw = mesh::load_obj(obj);

  mesh::ConvertOptions opts;
  opts.quantize = settings_.quantize;
  if (const StageSpec* s = plan.find("Texturing")) opts.texture_side = s->params.value("textureSide", opts.texture_side);
  if (backend_.processes_mesh()) {
    opts.factor = 1.0;
  } else {
    if (const StageSpec* s = plan.find("MeshDecimate")) opts.factor = s->params.value("simplificationFactor", 0.3);
    if (const StageSpec* s = plan.find("MeshDenoising"); s && s->enabled) {
      opts.denoise = true;
      opts.lmd = s->params.value("lmd", opts.lmd);
      opts.eta = s->params.value("eta", opts.eta);
    }
    if (const StageSpec* s = plan.find("MeshResampling"); s && s->enabled) {
      opts.resample = true;
      opts.resample_factor = s->params.value("simplificationFactor", opts.resample_factor);
    }
  }
  mesh::ConvertResult converted = mesh::convert(raw, mesh_bundle_bytes(texturing), opts);

  fs::path artifact = blobs_.artifact_path(site.verbose_id, run.id);
  fs::create_directories(artifact.parent_path());
  write_file_atomic(artifact, converted.glb);
  std::string digest = sha256_hex(converted.glb);

  std::set<std::int64_t> contributors;
  for (ContributionId c : run.contribution_ids_used) {
    if (auto rec = store_.find_contribution(c)) contributors.insert(rec->contributor_id.value);
  }

  Timestamp now = clock_.now();
  RunRecord published = store_.transaction([&] {
    ark::StoreRegistry registry(store_);
    ArkRecord minted = ark::mint({settings_.naan, settings_.shoulder, ark::kDefaultBladeLength, now}, ark_rng_, registry);
    ark::ArkName name{minted.naan, minted.shoulder, minted.name()};
    store_.attach_ark_to_run(minted.naan, minted.name(), run.id);
    nlohmann::json metadata = {{"name", site.name},
                               {"verbose_id", site.verbose_id},
                               {"run_id", run.id.value},
                               {"published_at", now},
                               {"contributor_count", contributors.size()},
                               {"license", settings_.license}};
    ark::bind(store_, name, "/sites/" + site.verbose_id, metadata);
    PublishInfo info{artifact.string(), digest, texturing.string(), name.render(),
                     {{"compression", converted.report.to_json()}}};
    RunRecord r = store_.publish_run(run.id, info, now);
    store_.set_site_status(run.site_id, SiteStatus::Live, now);
    return r;
  });
  return published;
}

RunRecord RunExecutor::fail(RunId id, const std::string& message) {
  Timestamp now = clock_.now();
  return store_.transaction([&] {
    RunRecord run = store_.transition_run(id, RunEvent::Fail, message, now);
    SiteRecord site = store_.get_site(run.site_id);
    if (site.status == SiteStatus::Processing) store_.set_site_status(run.site_id, SiteStatus::Error, now);
    return run;
  });
}

std::vector<RunId> RunExecutor::reap_abandoned() {
  std::vector<RunId> reaped;
  Timestamp now = clock_.now();
  for (const auto& run : store_.active_runs()) {
    auto lease = store_.run_lease(run.id);
    if (lease.holder && lease.expires_at > now) continue;
    auto job = store_.find_job_by_key(Store::idempotency_key(JobKind::ExecuteRun, execute_payload(run.id).dump()));
    if (job && (job->state == JobState::Ready || job->state == JobState::Claimed)) {
      // a claimed job whose visibility lapsed is still live: the next claim either retries or dead-letters it
      continue;
    }
    try {
      fail(run.id, "ABANDONED: no live job for this run");
      reaped.push_back(run.id);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::IllegalTransition) throw;
    }
  }
  return reaped;
}

}  // namespace tirtha::orchestrator
