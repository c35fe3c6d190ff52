#include "tirtha/orchestrator/subprocess.hpp"

#include <errno.h>
#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <fstream>
#include <sstream>
#include <thread>

#include "tirtha/common/error.hpp"

namespace tirtha::orchestrator {
namespace {

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += "'\\''";
    else out.push_back(c);
  }
  return out + "'";
}

std::string scalar_text(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

std::string log_tail(const fs::path& log, std::size_t max_bytes = 400) {
  std::ifstream in(log, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  std::string text = ss.str();
  if (text.size() > max_bytes) text = "..." + text.substr(text.size() - max_bytes);
  while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
  return text;
}

}  // namespace

SubprocessBackend SubprocessBackend::from_config(const Config& config) {
  std::map<std::string, StageCommand> commands;
  for (std::string_view name : kStageNames) {
    std::string prefix = "backend.stage." + std::string(name);
    if (!config.contains(prefix + ".cmd")) continue;
    StageCommand cmd;
    cmd.cmd = config.get_string(prefix + ".cmd", "");
    double seconds = config.get_double(prefix + ".timeout", 3600.0);
    cmd.timeout = std::chrono::milliseconds(static_cast<std::int64_t>(seconds * 1000.0));
    commands.emplace(std::string(name), std::move(cmd));
  }
  return SubprocessBackend(std::move(commands));
}

void SubprocessBackend::check(const StagePlan& plan) const {
  for (const auto& stage : plan.stages) {
    if (stage.enabled && !commands_.count(stage.name)) {
      throw Error(ErrorCode::Validation, "no command template for stage " + stage.name +
                                             " (set backend.stage." + stage.name + ".cmd)");
    }
  }
}

std::string SubprocessBackend::render(const std::string& tmpl, const StageInput& input) {
  std::string out;
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    auto open = tmpl.find('{', pos);
    if (open == std::string::npos) {
      out.append(tmpl, pos);
      break;
    }
    out.append(tmpl, pos, open - pos);
    auto close = tmpl.find('}', open);
    if (close == std::string::npos) throw Error(ErrorCode::Validation, "unterminated placeholder in '" + tmpl + "'");
    std::string key = tmpl.substr(open + 1, close - open - 1);
    if (key == "input_dir") out += shell_quote(input.input_dir.string());
    else if (key == "output_dir") out += shell_quote(input.output_dir.string());
    else if (key == "images_dir") out += shell_quote(input.images_dir.string());
    else if (key == "stage") out += input.stage->name;
    else if (key.rfind("param:", 0) == 0) {
      std::string param = key.substr(6);
      if (!input.stage->params.contains(param)) {
        throw Error(ErrorCode::Validation, "stage " + input.stage->name + " has no parameter '" + param + "'");
      }
      out += shell_quote(scalar_text(input.stage->params[param]));
    } else {
      throw Error(ErrorCode::Validation, "unknown placeholder {" + key + "}");
    }
    pos = close + 1;
  }
  return out;
}

StageOutcome SubprocessBackend::run_stage(const StageInput& input) {
  const StageSpec& stage = *input.stage;
  auto it = commands_.find(stage.name);
  if (it == commands_.end()) throw Error(ErrorCode::Validation, "no command template for stage " + stage.name);
  const std::string command = render(it->second.cmd, input);
  const fs::path log = input.output_dir / "stage.log";

  pid_t pid = ::fork();
  if (pid < 0) throw Error(ErrorCode::StageFailed, stage.name + ": fork failed");
  if (pid == 0) {
    ::setpgid(0, 0);
    int fd = ::open(log.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    if (fd >= 0) {
      ::dup2(fd, STDOUT_FILENO);
      ::dup2(fd, STDERR_FILENO);
      ::close(fd);
    }
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::setpgid(pid, pid);

  const auto deadline = std::chrono::steady_clock::now() + it->second.timeout;
  int status = 0;
  for (;;) {
    pid_t r = ::waitpid(pid, &status, WNOHANG);
    if (r == pid) break;
    if (r < 0 && errno != EINTR) throw Error(ErrorCode::StageFailed, stage.name + ": waitpid failed");
    if (std::chrono::steady_clock::now() >= deadline) {
      ::kill(-pid, SIGKILL);
      ::kill(pid, SIGKILL);
      ::waitpid(pid, &status, 0);
      throw Error(ErrorCode::Timeout, stage.name + " exceeded its time budget");
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }

  if (WIFEXITED(status) && WEXITSTATUS(status) == 0) {
    StageOutcome out;
    out.report = {{"command", command}};
    return out;
  }
  std::string how = WIFEXITED(status) ? "exit code " + std::to_string(WEXITSTATUS(status))
                                      : "signal " + std::to_string(WTERMSIG(status));
  std::string tail = log_tail(log);
  throw Error(ErrorCode::StageFailed, stage.name + " failed with " + how + (tail.empty() ? "" : ": " + tail));
}

}  // namespace tirtha::orchestrator
