#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "tirtha/api/auth.hpp"
#include "tirtha/orchestrator/platform.hpp"

namespace httplib {
class Server;
}

namespace tirtha::api {

struct ServiceSettings {
  std::uint64_t max_upload_bytes = 32ull << 20;
  int per_ip_daily = 500;
  std::string site_base_url;  // prefix for ARK redirects; empty: relative
  int min_short_side = 1080;

  static ServiceSettings from_config(const Config& config);
};

/// HTTP surface over a Platform. Handlers are stateless apart from the
/// per-IP upload counter; all persistent state lives in the store.
class ApiService {
 public:
  ApiService(orchestrator::Platform& platform, const TokenVerifier& verifier, AdminTokens admins,
             ServiceSettings settings);
  ~ApiService();

  /// Registers every route on `server`.
  void install(httplib::Server& server);

  /// Binds and serves until stop(); port 0 picks a free port, see port().
  bool start(const std::string& host, int port);
  void stop();
  int port() const { return port_; }

 private:
  struct Impl;
  friend struct Impl;

  orchestrator::Platform& platform_;
  const TokenVerifier& verifier_;
  AdminTokens admins_;
  ServiceSettings settings_;
  std::mutex rate_mutex_;
  std::map<std::pair<std::string, std::int64_t>, int> uploads_per_ip_;  // (ip, day) -> images
  std::unique_ptr<httplib::Server> server_;
  std::unique_ptr<std::thread> thread_;
  int port_ = 0;
};

}  // namespace tirtha::api
