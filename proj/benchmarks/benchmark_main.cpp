#include <benchmark/benchmark.h>

// the packaged libbenchmark_main.a ships stale LTO bytecode, so the runner
// entry point lives here
int main(int argc, char** argv) {
    benchmark::Initialize(&argc, argv);
    if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
    benchmark::RunSpecifiedBenchmarks();
    benchmark::Shutdown();
    return 0;
}
