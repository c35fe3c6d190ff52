#include <csignal>
#include <cstdio>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "tirtha/api/auth.hpp"
#include "tirtha/api/service.hpp"
#include "tirtha/ark/ark.hpp"
#include "tirtha/common/error.hpp"
#include "tirtha/common/io.hpp"
#include "tirtha/ingest/iqa.hpp"
#include "tirtha/ingest/jpeg.hpp"
#include "tirtha/mesh/obj.hpp"
#include "tirtha/mesh/report.hpp"
#include "tirtha/orchestrator/platform.hpp"

using namespace tirtha;
namespace fs = std::filesystem;

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop.store(true); }

Config load_config(const std::string& path) {
  Config config = path.empty() ? Config() : Config::load(path);
  config.apply_env();
  return config;
}

void print(const nlohmann::json& j) { std::cout << j.dump(2) << "\n"; }

int cmd_ark_mint(const std::string& naan, const std::string& shoulder, int count, std::optional<std::uint64_t> seed) {
  std::mt19937_64 rng(seed ? *seed : std::random_device{}());
  ark::MemoryRegistry registry;
  for (int i = 0; i < count; ++i) {
    ArkRecord rec = ark::mint({naan, shoulder, ark::kDefaultBladeLength, 0}, rng, registry);
    std::cout << "ark:/" << rec.naan << "/" << rec.name() << "\n";
  }
  return 0;
}

int cmd_ark_validate(const std::string& text) {
  try {
    ark::ArkName name = ark::parse(text);
    print({{"valid", true}, {"naan", name.naan}, {"name", name.name}, {"check", std::string(1, name.check())}});
    return 0;
  } catch (const Error& e) {
    print({{"valid", false}, {"code", to_string(e.code())}, {"message", e.what()}});
    return 1;
  }
}

int cmd_mesh_convert(const std::string& in, const std::string& out, const mesh::ConvertOptions& opts,
                     const std::string& report_path) {
  fs::path obj = in;
  mesh::TriangleMesh m = mesh::load_obj(obj);
  std::uint64_t input_bytes = fs::file_size(obj);
  fs::path mtl = obj;
  mtl.replace_extension(".mtl");
  if (fs::exists(mtl)) {
    input_bytes += fs::file_size(mtl);
    if (auto map = mesh::diffuse_map(read_text_file(mtl), std::nullopt)) {
      fs::path tex = obj.parent_path() / *map;
      if (fs::exists(tex)) input_bytes += fs::file_size(tex);
    }
  }
  mesh::ConvertResult result = mesh::convert(m, input_bytes, opts);
  write_file_atomic(out, result.glb);
  if (!report_path.empty()) write_file_atomic(report_path, std::string_view(result.report.to_json().dump(2)));
  print(result.report.to_json());
  return 0;
}

int cmd_iqa(const std::string& path, const std::string& config_path) {
  Config config = load_config(config_path);
  Bytes bytes = read_file(path);
  ingest::DecodeOptions dopts;
  dopts.min_short_side = static_cast<int>(config.get_int("ingest.min_short_side", 1080));
  ingest::DecodedImage image = ingest::decode_and_validate(bytes, dopts);
  ingest::LaplacianProxyScorer scorer = ingest::LaplacianProxyScorer::from_config(config);
  ingest::IqaSettings settings = ingest::IqaSettings::from_config(config);
  IqaReport report = ingest::assess(image, scorer, settings);
  nlohmann::json j = report;
  j["label"] = to_string(ingest::label_image(report, settings.thresholds));
  print(j);
  return 0;
}

int cmd_worker(const std::string& config_path, int concurrency, bool drain) {
  SystemClock clock;
  orchestrator::Platform platform(load_config(config_path), clock);
  if (drain) {
    auto worker = platform.make_worker("cli-" + std::to_string(::getpid()), false);
    std::size_t n = worker.drain();
    print({{"handled", n}, {"queue_depth", platform.store().queue_depth()}});
    return 0;
  }
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::vector<std::thread> threads;
  for (int i = 0; i < concurrency; ++i) {
    threads.emplace_back([&, i] {
      auto worker = platform.make_worker("worker-" + std::to_string(::getpid()) + "-" + std::to_string(i));
      worker.run(g_stop);
    });
  }
  for (auto& t : threads) t.join();
  return 0;
}

nlohmann::json run_status(Store& store, RunId id) {
  RunRecord run = store.get_run(id);
  nlohmann::json j = run;
  return j;
}

int cmd_pipeline_run(const std::string& config_path, const std::string& site_key, const std::string& backend,
                     bool enqueue_only) {
  SystemClock clock;
  Config config = load_config(config_path);
  if (!backend.empty()) config.set("backend.kind", backend);
  orchestrator::Platform platform(config, clock);
  auto site = platform.store().find_site_by_verbose_id(site_key);
  if (!site) throw Error(ErrorCode::NotFound, "no site '" + site_key + "'");
  RunRecord run = orchestrator::request_run(platform.store(), platform.queue(), site->id);
  if (!enqueue_only) {
    auto worker = platform.make_worker("pipeline-" + std::to_string(::getpid()), false);
    worker.drain();
  }
  nlohmann::json status = run_status(platform.store(), run.id);
  print(status);
  RunState state = platform.store().get_run(run.id).state;
  return enqueue_only || state == RunState::Published ? 0 : 1;
}

int cmd_pipeline_status(const std::string& config_path, std::int64_t run) {
  SystemClock clock;
  orchestrator::Platform platform(load_config(config_path), clock);
  print(run_status(platform.store(), RunId(run)));
  return 0;
}

int cmd_site_create(const std::string& config_path, const SiteInput& input, const ReconOptions& options) {
  SystemClock clock;
  orchestrator::Platform platform(load_config(config_path), clock);
  SiteRecord site = platform.store().create_site(input, options, clock.now());
  nlohmann::json j = site;
  print(j);
  return 0;
}

int cmd_site_contribute(const std::string& config_path, const std::string& site_key, const std::string& email,
                        const std::string& name, const std::vector<std::string>& files) {
  SystemClock clock;
  Config config = load_config(config_path);
  orchestrator::Platform platform(config, clock);
  Store& store = platform.store();
  auto site = store.find_site_by_verbose_id(site_key);
  if (!site) throw Error(ErrorCode::NotFound, "no site '" + site_key + "'");
  ContributorRecord contributor = store.upsert_contributor(email, name);
  if (contributor.banned) throw Error(ErrorCode::ContributorBanned, "contributor is banned");

  ingest::DecodeOptions opts;
  opts.min_short_side = static_cast<int>(config.get_int("ingest.min_short_side", 1080));
  std::vector<ImageBlob> blobs;
  nlohmann::json rejected = nlohmann::json::array();
  for (const auto& file : files) {
    try {
      Bytes bytes = read_file(file);
      ingest::DecodedImage image = ingest::decode_and_validate(bytes, opts);
      fs::path stored = platform.blobs().put_image(bytes, image.source_hash);
      blobs.push_back(ImageBlob{stored.string(), static_cast<std::int64_t>(bytes.size()), image.width(),
                                image.height(), image.exif.has_value(), image.source_hash});
    } catch (const Error& e) {
      rejected.push_back({{"filename", file}, {"reason", to_string(e.code())}});
    }
  }
  if (blobs.empty()) {
    print({{"accepted_count", 0}, {"rejected", rejected}});
    return 1;
  }
  ContributionRecord rec = store.record_contribution(site->id, contributor.id, blobs, clock.now());
  print({{"contribution_id", rec.id.value}, {"accepted_count", rec.image_ids.size()}, {"rejected", rejected}});
  return 0;
}

int cmd_serve(const std::string& config_path, const std::string& bind, int workers) {
  SystemClock clock;
  Config config = load_config(config_path);
  std::string addr = bind.empty() ? config.get_string("server.bind", "127.0.0.1:8080") : bind;
  auto colon = addr.rfind(':');
  if (colon == std::string::npos) throw Error(ErrorCode::Validation, "--bind expects host:port");
  std::string host = addr.substr(0, colon);
  int port = std::stoi(addr.substr(colon + 1));

  orchestrator::Platform platform(config, clock);
  api::Hs256JwtVerifier verifier(config.get_string("auth.hs256_secret", ""), config.get_string("auth.issuer", ""), clock);
  api::ApiService service(platform, verifier, api::AdminTokens::from_config(config), api::ServiceSettings::from_config(config));

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  if (!service.start(host, port)) {
    std::cerr << "cannot bind " << addr << "\n";
    return 1;
  }
  std::cerr << "listening on " << host << ":" << service.port() << "\n";
  std::vector<std::thread> threads;
  for (int i = 0; i < workers; ++i) {
    threads.emplace_back([&, i] {
      auto worker = platform.make_worker("serve-" + std::to_string(::getpid()) + "-" + std::to_string(i));
      worker.run(g_stop);
    });
  }
  while (!g_stop.load()) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  service.stop();
  for (auto& t : threads) t.join();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tirtha: crowdsourced heritage photogrammetry platform"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  // lets "--config" appear after the subcommand too
  app.fallthrough();

  auto* ark_cmd = app.add_subcommand("ark", "mint and validate ARK identifiers");
  ark_cmd->require_subcommand(1);
  std::string naan = "74218", shoulder = "t1";
  int count = 1;
  std::optional<std::uint64_t> seed;
  auto* mint = ark_cmd->add_subcommand("mint", "mint names (in memory; not registered)");
  mint->add_option("--naan", naan);
  mint->add_option("--shoulder", shoulder);
  mint->add_option("--count", count)->check(CLI::PositiveNumber);
  mint->add_option("--seed", seed);
  std::string ark_text;
  auto* validate = ark_cmd->add_subcommand("validate", "parse and check an ARK");
  validate->add_option("ark", ark_text)->required();

  auto* mesh_cmd = app.add_subcommand("mesh", "mesh post-processing");
  mesh_cmd->require_subcommand(1);
  std::string in, out;
  mesh::ConvertOptions copts;
  bool no_quantize = false;
  auto* convert = mesh_cmd->add_subcommand("convert", "OBJ (+MTL+texture) to compressed GLB");
  convert->add_option("input", in)->required()->check(CLI::ExistingFile);
  convert->add_option("output", out)->required();
  convert->add_option("--factor", copts.factor)->check(CLI::Range(0.0, 1.0));
  convert->add_option("--texture-side", copts.texture_side)->check(CLI::PositiveNumber);
  convert->add_flag("--no-quantize", no_quantize);
  convert->add_flag("--denoise", copts.denoise);
  convert->add_option("--lmd", copts.lmd);
  convert->add_option("--eta", copts.eta);
  convert->add_flag("--resample", copts.resample);
  std::string report_path;
  convert->add_option("--report", report_path, "also write the compression report here");

  auto* iqa_cmd = app.add_subcommand("iqa", "score one JPEG with the configured thresholds");
  std::string iqa_path;
  iqa_cmd->add_option("image", iqa_path)->required()->check(CLI::ExistingFile);

  auto* worker_cmd = app.add_subcommand("worker", "run queue workers");
  int concurrency = 1;
  bool drain = false;
  worker_cmd->add_option("--concurrency", concurrency)->check(CLI::PositiveNumber);
  worker_cmd->add_flag("--drain", drain, "handle visible jobs and exit");

  auto* pipeline = app.add_subcommand("pipeline", "reconstruction runs");
  pipeline->require_subcommand(1);
  std::string site_key, backend;
  bool enqueue_only = false;
  auto* prun = pipeline->add_subcommand("run", "start a run for a site and execute it in-process");
  prun->add_option("--site", site_key, "site verbose_id")->required();
  prun->add_option("--backend", backend)->check(CLI::IsMember({"synthetic", "subprocess"}));
  prun->add_flag("--enqueue-only", enqueue_only, "leave the run for workers");
  std::int64_t run_id = 0;
  auto* pstatus = pipeline->add_subcommand("status", "show a run");
  pstatus->add_option("--run", run_id)->required();

  auto* site_cmd = app.add_subcommand("site", "site administration");
  site_cmd->require_subcommand(1);
  SiteInput site_input;
  ReconOptions recon;
  auto* screate = site_cmd->add_subcommand("create", "create a site");
  screate->add_option("--name", site_input.name)->required();
  screate->add_option("--description", site_input.description);
  screate->add_option("--country", site_input.country);
  screate->add_option("--state", site_input.state);
  screate->add_option("--district", site_input.district);
  screate->add_option("--locality", site_input.locality);
  screate->add_option("--factor", recon.simplification_factor);
  screate->add_option("--texture-side", recon.texture_side);
  screate->add_flag("--denoise", recon.denoise);
  screate->add_flag("--resample", recon.resample);

  std::string contrib_email = "cli@localhost", contrib_name;
  std::vector<std::string> contrib_files;
  auto* scontrib = site_cmd->add_subcommand("contribute", "add local JPEGs to a site as one contribution");
  scontrib->add_option("--site", site_key, "site verbose_id")->required();
  scontrib->add_option("--email", contrib_email, "contributor email");
  scontrib->add_option("--contributor-name", contrib_name);
  scontrib->add_option("images", contrib_files)->required()->check(CLI::ExistingFile);

  auto* serve = app.add_subcommand("serve", "HTTP API server");
  std::string bind;
  int serve_workers = 0;
  serve->add_option("--bind", bind, "addr:port");
  serve->add_option("--workers", serve_workers, "in-process worker threads")->check(CLI::NonNegativeNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (mint->parsed()) return cmd_ark_mint(naan, shoulder, count, seed);
    if (validate->parsed()) return cmd_ark_validate(ark_text);
    if (convert->parsed()) {
      copts.quantize = !no_quantize;
      return cmd_mesh_convert(in, out, copts, report_path);
    }
    if (iqa_cmd->parsed()) return cmd_iqa(iqa_path, config_path);
    if (worker_cmd->parsed()) return cmd_worker(config_path, concurrency, drain);
    if (prun->parsed()) return cmd_pipeline_run(config_path, site_key, backend, enqueue_only);
    if (pstatus->parsed()) return cmd_pipeline_status(config_path, run_id);
    if (screate->parsed()) return cmd_site_create(config_path, site_input, recon);
    if (scontrib->parsed()) return cmd_site_contribute(config_path, site_key, contrib_email, contrib_name, contrib_files);
    if (serve->parsed()) return cmd_serve(config_path, bind, serve_workers);
  } catch (const Error& e) {
    std::cerr << to_string(e.code()) << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
