#pragma once

#include <chrono>
#include <deque>
#include <mutex>
#include <vector>

namespace isaac::annotate {

class Clock {
 public:
  using Duration = std::chrono::milliseconds;
  using TimePoint = std::chrono::time_point<std::chrono::steady_clock, Duration>;
  virtual ~Clock() = default;
  virtual TimePoint now() = 0;
  virtual void sleep_for(Duration d) = 0;
};

class SteadyClock : public Clock {
 public:
  TimePoint now() override;
  void sleep_for(Duration d) override;
};

// Time advances only through sleep_for (and advance), so tests can check
// scheduling without waiting.
class FakeClock : public Clock {
 public:
  TimePoint now() override;
  void sleep_for(Duration d) override;
  void advance(Duration d);
  std::vector<Duration> sleeps() const;

 private:
  mutable std::mutex mu_;
  TimePoint now_{};
  std::vector<Duration> sleeps_;
};

// Sliding-window limiter: at most `per_minute` acquisitions in any 60 s
// window. acquire() blocks (via the clock) until a slot frees up.
class RateLimiter {
 public:
  RateLimiter(int per_minute, Clock& clock);
  void acquire();
  int per_minute() const { return per_minute_; }

 private:
  int per_minute_;
  Clock& clock_;
  std::mutex mu_;
  std::deque<Clock::TimePoint> stamps_;
};

}  // namespace isaac::annotate
