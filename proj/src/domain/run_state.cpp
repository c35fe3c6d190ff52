#include "tirtha/domain/run_state.hpp"

namespace tirtha {

std::string_view to_string(RunEvent e) {
  switch (e) {
    case RunEvent::StartPreprocess: return "start_preprocess";
    case RunEvent::StartReconstruct: return "start_reconstruct";
    case RunEvent::StartPostprocess: return "start_postprocess";
    case RunEvent::Publish: return "publish";
    case RunEvent::Fail: return "fail";
    case RunEvent::Archive: return "archive";
  }
  return "?";
}

bool is_terminal(RunState state) {
  return state == RunState::Published || state == RunState::Failed || state == RunState::Archived;
}

std::optional<RunState> next_run_state(RunState from, RunEvent event) {
  switch (event) {
    case RunEvent::StartPreprocess:
      if (from == RunState::Queued) return RunState::Preprocessing;
      break;
    case RunEvent::StartReconstruct:
      if (from == RunState::Preprocessing) return RunState::Reconstructing;
      break;
    case RunEvent::StartPostprocess:
      if (from == RunState::Reconstructing) return RunState::Postprocessing;
      break;
    case RunEvent::Publish:
      if (from == RunState::Postprocessing) return RunState::Published;
      break;
    case RunEvent::Fail:
      if (!is_terminal(from)) return RunState::Failed;
      break;
    case RunEvent::Archive:
      if (from == RunState::Published || from == RunState::Failed) return RunState::Archived;
      break;
  }
  return std::nullopt;
}

bool is_legal_step(RunState from, RunState to) {
  for (auto e : {RunEvent::StartPreprocess, RunEvent::StartReconstruct, RunEvent::StartPostprocess,
                 RunEvent::Publish, RunEvent::Fail, RunEvent::Archive}) {
    if (next_run_state(from, e) == to) return true;
  }
  return false;
}

bool is_legal_site_transition(SiteStatus from, SiteStatus to) {
  switch (from) {
    case SiteStatus::Live: return to == SiteStatus::Processing;
    case SiteStatus::Processing: return to == SiteStatus::Live || to == SiteStatus::Error;
    case SiteStatus::Error: return to == SiteStatus::Processing;
  }
  return false;
}

}  // namespace tirtha
