#pragma once

#include <cstddef>
#include <functional>

namespace lordba {

/// Worker count for parallel loops. Defaults to LORDBA_THREADS when set,
/// otherwise 1. Results never depend on this value.
std::size_t thread_count();
void set_thread_count(std::size_t n);

/// Runs body(i) for i in [0, n). Each index is visited exactly once and the
/// body must only write state owned by that index.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace lordba
