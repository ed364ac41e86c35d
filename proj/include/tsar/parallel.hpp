#pragma once

namespace tsar {

/// Number of threads parallel kernels may use. Reads TSAR_THREADS once on
/// first call; falls back to the OpenMP default when unset or invalid.
int max_threads();

}  // namespace tsar
