#pragma once

#include <atomic>
#include <cstdint>

namespace tirtha {

/// Milliseconds since the Unix epoch.
using Timestamp = std::int64_t;

constexpr Timestamp kSecond = 1000;
constexpr Timestamp kMinute = 60 * kSecond;
constexpr Timestamp kHour = 60 * kMinute;
constexpr Timestamp kDay = 24 * kHour;

class Clock {
 public:
  virtual ~Clock() = default;
  virtual Timestamp now() const = 0;
};

class SystemClock final : public Clock {
 public:
  Timestamp now() const override;
};

/// Test clock; only moves when told to.
class ManualClock final : public Clock {
 public:
  explicit ManualClock(Timestamp start = 1'700'000'000'000) : now_(start) {}

  Timestamp now() const override { return now_.load(); }
  void set(Timestamp t) { now_.store(t); }
  void advance(Timestamp delta) { now_.fetch_add(delta); }

 private:
  std::atomic<Timestamp> now_;
};

}  // namespace tirtha
