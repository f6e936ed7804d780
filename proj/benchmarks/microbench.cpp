// Microbenchmarks for the hot paths: address translation, burst
// expansion, payload generation, and whole-engine cycle rate.

#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "smcsim/addressing.hpp"
#include "smcsim/engine.hpp"
#include "smcsim/memory.hpp"
#include "smcsim/rng.hpp"

using namespace smcsim;

namespace {

struct Fixture {
  TopologyConfig topo;
  AddressGeometry geom;
  InterleaveScheme scheme;

  explicit Fixture(SchemeKind kind) {
    topo.validate();
    geom = derive_geometry(topo);
    scheme.kind = kind;
    scheme.validate(topo, geom);
  }
};

void bench_decompose(benchmark::State& state) {
  const Fixture f(state.range(0) ? SchemeKind::xor_fold
                                 : SchemeKind::identity);
  Rng rng(1);
  std::vector<uint64_t> addresses(4096);
  for (uint64_t& a : addresses) {
    a = rng.next_below(f.topo.total_beats()) * f.topo.beat_bytes;
  }
  size_t i = 0;
  for (auto _ : state) {
    const Location loc =
        decompose(addresses[i++ & 4095], f.geom, f.scheme);
    benchmark::DoNotOptimize(loc);
  }
}

void bench_roundtrip(benchmark::State& state) {
  const Fixture f(SchemeKind::xor_fold);
  Rng rng(2);
  std::vector<uint64_t> addresses(4096);
  for (uint64_t& a : addresses) {
    a = rng.next_below(f.topo.total_beats()) * f.topo.beat_bytes;
  }
  size_t i = 0;
  for (auto _ : state) {
    const uint64_t a = addresses[i++ & 4095];
    benchmark::DoNotOptimize(compose(decompose(a, f.geom, f.scheme),
                                     f.geom, f.scheme));
  }
}

void bench_expand_burst(benchmark::State& state) {
  const Fixture f(SchemeKind::xor_fold);
  const uint32_t beats = uint32_t(state.range(0));
  const uint64_t stride = uint64_t(beats) * f.topo.beat_bytes;
  Rng rng(3);
  std::vector<uint64_t> bases(1024);
  for (uint64_t& b : bases) {
    b = rng.next_below(f.topo.total_bytes / stride) * stride;
  }
  size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(expand_burst(bases[i++ & 1023], beats, f.geom,
                                          f.scheme, f.topo.total_bytes));
  }
  state.SetItemsProcessed(int64_t(state.iterations()) * beats);
}

// Mirrors the write-data fill: one seeded draw per 8-byte chunk.
void bench_payload_expand(benchmark::State& state) {
  uint64_t seed = 7;
  uint64_t chunks[4];
  for (auto _ : state) {
    for (uint64_t c = 0; c < 4; ++c) {
      Rng rng(seed + c);
      chunks[c] = rng.next_u64();
    }
    ++seed;
    benchmark::DoNotOptimize(chunks);
  }
  state.SetBytesProcessed(int64_t(state.iterations()) * 32);
}

// End-to-end engine rate: simulated fabric cycles per wall second under a
// saturated sixteen-port uniform load.
void bench_engine(benchmark::State& state) {
  int64_t cycles = 0;
  for (auto _ : state) {
    SimConfig config;
    config.workload.assignment = "uniform";
    config.workload.transactions_per_port = 500;
    Simulation sim(config, 42);
    const RunReport report = sim.run();
    cycles += int64_t(report.total_cycles);
  }
  state.SetItemsProcessed(cycles);
  state.counters["cycles_per_s"] = benchmark::Counter(
      double(cycles), benchmark::Counter::kIsRate);
}

}  // namespace

BENCHMARK(bench_decompose)->Arg(0)->Arg(1);
BENCHMARK(bench_roundtrip);
BENCHMARK(bench_expand_burst)->Arg(4)->Arg(16);
BENCHMARK(bench_payload_expand);
BENCHMARK(bench_engine)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
