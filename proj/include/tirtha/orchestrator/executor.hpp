#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "tirtha/common/clock.hpp"
#include "tirtha/common/config.hpp"
#include "tirtha/domain/store.hpp"
#include "tirtha/orchestrator/backend.hpp"
#include "tirtha/orchestrator/storage.hpp"

namespace tirtha::orchestrator {

struct ExecutorSettings {
  int min_images = 20;
  std::uint64_t seed = 42;
  Timestamp lease = 10 * kMinute;
  std::string naan = "74218";
  std::string shoulder = "t1";
  std::string license = "CC-BY-4.0";
  std::optional<std::uint64_t> ark_seed;  // unset: seeded from the OS
  bool quantize = true;

  static ExecutorSettings from_config(const Config& config);
};

/// Drives one run through the state machine. Every step is resumable: a
/// second call after a crash continues from the last persisted state and
/// skips stages already logged OK. Calls for a terminal run are no-ops.
class RunExecutor {
 public:
  RunExecutor(Store& store, BlobStore& blobs, Backend& backend, Clock& clock, ExecutorSettings settings);

  /// Throws RUN_BUSY while another holder's lease is live. A TIMEOUT from the
  /// backend propagates for retry unless `final_attempt` is set, in which
  /// case the run fails.
  RunRecord execute(RunId run, const std::string& holder, bool final_attempt = false);

  /// Fails active runs whose lease has lapsed and whose EXECUTE_RUN job is
  /// no longer live (dead-lettered or missing). Returns the runs it failed.
  std::vector<RunId> reap_abandoned();

  /// Fails the run (and marks its site ERROR if it had started processing).
  RunRecord fail(RunId run, const std::string& message);

  const ExecutorSettings& settings() const { return settings_; }

 private:
  RunRecord start(RunRecord run);
  RunRecord preprocess(RunRecord run);
  RunRecord reconstruct(RunRecord run, const std::string& holder, bool final_attempt);
  RunRecord postprocess(RunRecord run);
  void renew(RunId run, const std::string& holder);

  Store& store_;
  BlobStore& blobs_;
  Backend& backend_;
  Clock& clock_;
  ExecutorSettings settings_;
  std::mt19937_64 ark_rng_;
};

}  // namespace tirtha::orchestrator
