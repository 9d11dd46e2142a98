#pragma once

namespace cvx {

/// Every data-parallel kernel takes one of these. `serial` is the reference
/// path kept for testing; both paths reduce in the same fixed order and return
/// bit-identical results.
enum class Execution { serial, parallel };

/// Thread count used by `Execution::parallel`. Reads CONVEXITO_THREADS, then
/// falls back to the OpenMP default.
int default_thread_count();

/// Overrides the thread count for subsequent parallel kernels (0 restores the default).
void set_thread_count(int n);

}  // namespace cvx
