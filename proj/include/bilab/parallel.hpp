#pragma once

#include <cstddef>
#include <functional>

namespace bilab {

// Worker count used by sweep-level parallel maps; 1 runs inline.
void set_thread_count(unsigned threads);
unsigned thread_count();

// Calls body(i) for i in [0, count). Each index is handled by exactly one worker;
// callers write results into per-index slots so reductions stay ordered.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

} // namespace bilab
