#ifndef FRACHEAT_THREADING_HPP
#define FRACHEAT_THREADING_HPP

#include <cstddef>
#include <functional>

namespace fracheat {

// Worker count resolution: explicit argument > FRACHEAT_THREADS > hardware.
int resolve_threads(int requested = 0);

// Static partition of [0, n) over worker threads. Tasks must write to
// disjoint slots; reductions happen serially afterwards so results do not
// depend on the thread count.
void parallel_for(size_t n, const std::function<void(size_t)> &body, int threads = 0);

} // namespace fracheat

#endif
