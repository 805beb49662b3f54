#pragma once

#include <exception>
#include <mutex>

namespace mixedlattice::detail {

// OpenMP loop over [0, n) that rethrows the first exception on the caller's
// thread once every iteration has finished.
template <typename Body>
void parallel_for(int n, Body&& body) {
  std::exception_ptr first;
  std::mutex guard;
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    try {
      body(i);
    } catch (...) {
      std::lock_guard lock(guard);
      if (!first) first = std::current_exception();
    }
  }
  if (first) std::rethrow_exception(first);
}

}  // namespace mixedlattice::detail
