#pragma once

#include <chrono>
#include <map>
#include <string>

#include "tirtha/orchestrator/backend.hpp"

namespace tirtha::orchestrator {

/// Runs each stage as `/bin/sh -c <template>` with placeholders
/// {input_dir}, {output_dir}, {images_dir}, {stage} and {param:<key>}
/// substituted. Output goes to <output_dir>/stage.log.
class SubprocessBackend : public Backend {
 public:
  struct StageCommand {
    std::string cmd;
    std::chrono::milliseconds timeout{std::chrono::hours(1)};
  };

  explicit SubprocessBackend(std::map<std::string, StageCommand> commands) : commands_(std::move(commands)) {}
  /// Reads backend.stage.<Name>.cmd and backend.stage.<Name>.timeout (seconds).
  static SubprocessBackend from_config(const Config& config);

  std::string_view kind() const override { return "subprocess"; }
  void check(const StagePlan& plan) const override;
  StageOutcome run_stage(const StageInput& input) override;
  bool processes_mesh() const override { return true; }

  static std::string render(const std::string& tmpl, const StageInput& input);

 private:
  std::map<std::string, StageCommand> commands_;
};

}  // namespace tirtha::orchestrator
