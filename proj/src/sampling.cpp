#include "chemdist/sampling.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "chemdist/rng.hpp"

namespace chemdist {

GiantSample sample_with_giant(const BoxSpec& spec, double p, std::uint64_t seed, std::size_t max_attempts) {
  for (std::size_t attempt = 0; attempt < max_attempts; ++attempt) {
    const std::uint64_t key = attempt == 0 ? seed : derive_seed(seed, {tag_of("retry"), attempt});
    auto cfg = sample_configuration(spec, p, key);
    auto labels = label_clusters(cfg);
    if (labels.giant()) return GiantSample{std::move(cfg), std::move(labels), attempt};
  }
  throw NoGiantCluster("no spanning giant cluster after " + std::to_string(max_attempts) +
                       " attempts (p too small or box too small?)");
}

std::uint64_t replication_seed(std::uint64_t master, const std::string& experiment, std::size_t rep) {
  return derive_seed(master, {tag_of(experiment), static_cast<std::uint64_t>(rep)});
}

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            body(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next = count;
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

int default_thread_count() {
  if (const char* env = std::getenv("CHEMDIST_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

}  // namespace chemdist
