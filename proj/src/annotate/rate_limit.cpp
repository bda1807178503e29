#include "isaac/annotate/rate_limit.hpp"

#include <thread>

#include "isaac/util/error.hpp"

namespace isaac::annotate {

Clock::TimePoint SteadyClock::now() {
  return std::chrono::time_point_cast<Duration>(std::chrono::steady_clock::now());
}

void SteadyClock::sleep_for(Duration d) { std::this_thread::sleep_for(d); }

Clock::TimePoint FakeClock::now() {
  std::lock_guard lock(mu_);
  return now_;
}

void FakeClock::sleep_for(Duration d) {
  std::lock_guard lock(mu_);
  sleeps_.push_back(d);
  now_ += d;
}

void FakeClock::advance(Duration d) {
  std::lock_guard lock(mu_);
  now_ += d;
}

std::vector<Clock::Duration> FakeClock::sleeps() const {
  std::lock_guard lock(mu_);
  return sleeps_;
}

RateLimiter::RateLimiter(int per_minute, Clock& clock) : per_minute_(per_minute), clock_(clock) {
  if (per_minute < 1) throw Error(ErrorCode::kInvalidArgument, "requests per minute must be >= 1");
}

void RateLimiter::acquire() {
  constexpr auto kWindow = std::chrono::minutes(1);
  std::lock_guard lock(mu_);
  for (;;) {
    const auto now = clock_.now();
    while (!stamps_.empty() && now - stamps_.front() >= kWindow) stamps_.pop_front();
    if (static_cast<int>(stamps_.size()) < per_minute_) {
      stamps_.push_back(now);
      return;
    }
    clock_.sleep_for(std::chrono::duration_cast<Clock::Duration>(stamps_.front() + kWindow - now));
  }
}

}  // namespace isaac::annotate
