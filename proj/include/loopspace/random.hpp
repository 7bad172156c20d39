#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Core>

namespace loopspace {

// Seeded normal stream. One instance per Monte Carlo sample; the stream for
// sample i is derived from (seed, i) so results do not depend on how samples
// are distributed over worker threads.
class Rng {
public:
  explicit Rng(std::uint64_t seed);
  Rng(std::uint64_t seed, std::uint64_t stream);

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  Eigen::VectorXd normal_vector(int dim);

  // Independent child stream, e.g. to keep the base and fiber draws of a
  // bundle sample separate.
  Rng split(std::uint64_t tag);

private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

int worker_count();
void set_worker_count(int workers);

// Runs body(i) for i in [0, n) on the worker pool. Each index is independent;
// callers store per-index results and reduce them in index order.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

// Mean and standard error of a sample vector, summed in index order.
struct SampleStats {
  double mean = 0.0;
  double variance = 0.0;
  double standard_error = 0.0;
  std::size_t count = 0;
};

SampleStats sample_stats(const std::vector<double>& values);

} // namespace loopspace
