#pragma once

#include <cstddef>
#include <exception>
#include <mutex>

#include <omp.h>

namespace fsgauge {

/// Selects between the OpenMP kernel and its serial reference.
enum class ExecPolicy { Serial, Parallel };

/// Caps OpenMP worker threads; jobs <= 0 leaves the runtime default.
void set_max_jobs(int jobs);
int max_jobs();

/// Runs body(i) for i in [0, n). The body must write only to slot i of
/// preallocated outputs; results are then identical under both policies.
/// The exception of the lowest failing index is rethrown after the loop.
template <typename Body>
void parallel_for(std::size_t n, ExecPolicy policy, Body&& body) {
  if (policy == ExecPolicy::Serial || n < 2 || omp_in_parallel()) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr failure;
  std::size_t failure_index = n;
  std::mutex failure_mutex;
  const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (long long i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (static_cast<std::size_t>(i) < failure_index) {
        failure_index = static_cast<std::size_t>(i);
        failure = std::current_exception();
      }
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace fsgauge
