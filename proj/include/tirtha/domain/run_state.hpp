#pragma once

#include <optional>
#include <string_view>

#include "tirtha/domain/types.hpp"

namespace tirtha {

enum class RunEvent { StartPreprocess, StartReconstruct, StartPostprocess, Publish, Fail, Archive };

std::string_view to_string(RunEvent);

/// QUEUED -> PREPROCESSING -> RECONSTRUCTING -> POSTPROCESSING -> PUBLISHED,
/// any non-terminal -> FAILED, PUBLISHED/FAILED -> ARCHIVED.
std::optional<RunState> next_run_state(RunState from, RunEvent event);

/// True for states from which no further work happens (PUBLISHED, FAILED, ARCHIVED).
bool is_terminal(RunState state);

/// Whether `to` is reachable from `from` in a single legal step.
bool is_legal_step(RunState from, RunState to);

/// LIVE -> PROCESSING -> {LIVE, ERROR}, ERROR -> PROCESSING.
bool is_legal_site_transition(SiteStatus from, SiteStatus to);

}  // namespace tirtha
