#include "prodtest/report.hpp"

#include <atomic>
#include <cmath>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace prodtest {

void to_json(nlohmann::json& j, const ExperimentReport& r) {
  j = nlohmann::json{{"name", r.name},
                     {"spec", r.spec},
                     {"samples", r.samples},
                     {"estimate", r.estimate},
                     {"confidence_radius", r.confidence_radius},
                     {"seed", r.seed},
                     {"wall_time_ms", r.wall_time_ms},
                     {"details", r.details}};
}

double binomial_radius(std::uint64_t successes, std::uint64_t trials) {
  if (trials == 0) return 1.0;
  const double z = 1.959963984540054;  // 97.5th normal percentile
  const double n = static_cast<double>(trials);
  const double phat = static_cast<double>(successes) / n;
  const double z2 = z * z;
  return z * std::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n)) / (1.0 + z2 / n);
}

void parallel_for(std::uint64_t count, unsigned threads, const std::function<void(std::uint64_t)>& fn) {
  if (threads <= 1 || count < 2) {
    for (std::uint64_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::uint64_t> next{0};
  std::vector<std::thread> pool;
  const unsigned workers = std::min<std::uint64_t>(threads, count);
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::uint64_t i = next.fetch_add(1);
        if (i >= count || failed.load()) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          failed.store(true);
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace prodtest
