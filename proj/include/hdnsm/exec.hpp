#pragma once

#include <cstdint>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace hdnsm {

// Every grid/replicate loop in the library runs through for_each_index.
// serial is the reference path; parallel maps the same body over OpenMP
// threads. Work items must write to disjoint slots so both modes produce
// identical results.
enum class ExecMode { serial, parallel };

template <class F>
void for_each_index(ExecMode mode, std::int64_t count, F&& body) {
  if (mode == ExecMode::serial) {
    for (std::int64_t i = 0; i < count; ++i) body(i);
    return;
  }
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
  for (std::int64_t i = 0; i < count; ++i) body(i);
}

}  // namespace hdnsm
