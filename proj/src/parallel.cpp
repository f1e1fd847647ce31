#include "fsgauge/parallel.hpp"

namespace fsgauge {

void set_max_jobs(int jobs) {
  if (jobs > 0) omp_set_num_threads(jobs);
}

int max_jobs() { return omp_get_max_threads(); }

}  // namespace fsgauge
