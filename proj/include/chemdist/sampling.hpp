#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>

#include "chemdist/clusters.hpp"
#include "chemdist/lattice.hpp"

namespace chemdist {

/// A configuration conditioned on having a spanning giant cluster.
struct GiantSample {
  EdgeConfiguration cfg;
  ClusterLabels labels;
  std::size_t rejections = 0;
};

/// Samples with seed derive(seed, attempt) for attempt = 0, 1, ... until the
/// configuration has a spanning giant. Throws NoGiantCluster after `max_attempts`.
GiantSample sample_with_giant(const BoxSpec& spec, double p, std::uint64_t seed, std::size_t max_attempts = 64);

/// Seed of replication `rep` of experiment `experiment` under `master`.
std::uint64_t replication_seed(std::uint64_t master, const std::string& experiment, std::size_t rep);

/// Runs body(i) for i in [0, count) on `threads` workers. Results must be written
/// by index; the first exception thrown by a body is rethrown.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body);

/// Thread count from CHEMDIST_THREADS, else hardware concurrency.
int default_thread_count();

}  // namespace chemdist
