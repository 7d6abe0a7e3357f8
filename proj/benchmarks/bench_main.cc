#include <benchmark/benchmark.h>

// The packaged benchmark_main archive carries LTO objects from another
// compiler build, so main comes from here.
BENCHMARK_MAIN();
