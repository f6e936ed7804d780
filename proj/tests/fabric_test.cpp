#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <utility>
#include <vector>

#include "smcsim/fabric.hpp"

using namespace smcsim;

namespace {

struct StubGate : MemoryGate {
  bool allow = true;
  uint64_t calls = 0;
  bool try_reserve(const Location&, uint32_t) override {
    ++calls;
    return allow;
  }
};

struct Arrival {
  uint64_t cycle;
  uint64_t cmd_id;
  uint16_t beat_index;
};

Beat make_beat(uint32_t master, uint64_t cmd_id, uint16_t beat_index,
               uint32_t cluster, uint32_t array) {
  Beat b;
  b.master = master;
  b.cmd_id = cmd_id;
  b.beat_index = beat_index;
  b.location.cluster = cluster;
  b.location.array = array;
  return b;
}

struct Harness {
  TopologyConfig topo;
  TimingConfig timing;
  FabricState fabric;
  StubGate gate;
  std::vector<Arrival> arrivals;
  std::vector<Arrival> deliveries;
  std::vector<Arrival> commits;

  Harness() : fabric(topo, timing) {}

  // One fabric cycle in engine order: responses, arrivals, request ticks.
  void step(uint64_t cycle) {
    fabric.tick_response(
        cycle,
        [&](uint32_t, const ReadReturn& r) {
          deliveries.push_back({cycle, r.cmd_id, r.beat_index});
        },
        [&](uint32_t, uint64_t cmd_id, uint16_t beat_index) {
          commits.push_back({cycle, cmd_id, beat_index});
        });
    fabric.drain_request_arrivals(cycle, [&](Beat&& b) {
      arrivals.push_back({cycle, b.cmd_id, b.beat_index});
    });
    fabric.tick_request(cycle, gate);
  }
};

}  // namespace

TEST_CASE("an uncontended request beat arrives after the full path depth") {
  Harness h;
  const Beat beat = make_beat(0, 42, 0, 1, 2);
  CHECK(h.fabric.inject_beats(0, std::span(&beat, 1), 0) == 1);
  CHECK(h.fabric.split_occupancy(0) == 1);
  CHECK(h.fabric.request_beats_in_flight() == 1);
  for (uint64_t c = 0; c <= 10; ++c) h.step(c);
  CHECK(h.arrivals.empty());  // not a cycle early
  h.step(11);
  REQUIRE(h.arrivals.size() == 1);
  CHECK(h.arrivals[0].cycle == 11);
  CHECK(h.arrivals[0].cmd_id == 42);
  CHECK(h.fabric.split_occupancy(0) == 0);
  CHECK(h.fabric.request_beats_in_flight() == 0);
  CHECK(h.fabric.idle());
}

TEST_CASE("beats to different clusters ride parallel split paths") {
  Harness h;
  std::vector<Beat> burst;
  for (uint16_t i = 0; i < 4; ++i) {
    burst.push_back(make_beat(0, 7, i, i, 0));  // one beat per cluster
  }
  CHECK(h.fabric.inject_beats(0, burst, 0) == 4);
  for (uint64_t c = 0; c <= 11; ++c) h.step(c);
  // No serialization anywhere: all four arrive together at the path depth.
  REQUIRE(h.arrivals.size() == 4);
  for (const Arrival& a : h.arrivals) CHECK(a.cycle == 11);
}

TEST_CASE("beats to one cluster serialize at the first split") {
  Harness h;
  std::vector<Beat> beats;
  for (uint16_t i = 0; i < 3; ++i) beats.push_back(make_beat(0, 7, i, 2, 0));
  CHECK(h.fabric.inject_beats(0, beats, 0) == 3);
  for (uint64_t c = 0; c <= 13; ++c) h.step(c);
  REQUIRE(h.arrivals.size() == 3);
  CHECK(h.arrivals[0].cycle == 11);
  CHECK(h.arrivals[1].cycle == 12);
  CHECK(h.arrivals[2].cycle == 13);
  CHECK(h.arrivals[0].beat_index == 0);  // command order preserved
  CHECK(h.arrivals[1].beat_index == 1);
  CHECK(h.arrivals[2].beat_index == 2);
}

TEST_CASE("masters own independent split paths") {
  Harness h;
  const Beat b0 = make_beat(0, 1, 0, 0, 0);
  const Beat b1 = make_beat(1, 2, 0, 0, 0);  // same target, other master
  CHECK(h.fabric.inject_beats(0, std::span(&b0, 1), 0) == 1);
  CHECK(h.fabric.inject_beats(1, std::span(&b1, 1), 0) == 1);
  for (uint64_t c = 0; c <= 11; ++c) h.step(c);
  CHECK(h.arrivals.size() == 2);
  for (const Arrival& a : h.arrivals) CHECK(a.cycle == 11);
}

TEST_CASE("the split buffer bounds beats in flight per master") {
  Harness h;
  std::vector<Beat> beats;
  for (uint16_t i = 0; i < 65; ++i) {
    beats.push_back(make_beat(0, i, 0, i % 4, (i / 4) % 4));
  }
  CHECK(h.fabric.inject_beats(0, beats, 0) == 64);
  CHECK(h.fabric.split_occupancy(0) == 64);
  CHECK(h.fabric.peak_split_occupancy() == 64);
  const Beat extra = make_beat(0, 99, 0, 0, 0);
  CHECK(h.fabric.inject_beats(0, std::span(&extra, 1), 0) == 0);
  // Credits release at sub-bank arrival, not before.
  uint64_t c = 0;
  while (h.arrivals.empty()) h.step(c++);
  CHECK(h.fabric.split_occupancy(0) < 64);
  CHECK(h.fabric.inject_beats(0, std::span(&extra, 1), c) == 1);
  while (!h.fabric.idle() && c < 1000) h.step(c++);
  CHECK(h.arrivals.size() == 65);  // lossless
  CHECK(h.fabric.split_occupancy(0) == 0);
}

TEST_CASE("a refused reservation holds the beat without losing it") {
  Harness h;
  h.gate.allow = false;
  const Beat beat = make_beat(0, 5, 0, 0, 0);
  CHECK(h.fabric.inject_beats(0, std::span(&beat, 1), 0) == 1);
  for (uint64_t c = 0; c <= 19; ++c) h.step(c);
  CHECK(h.arrivals.empty());
  CHECK(h.gate.calls > 1);  // retried every cycle at the split output
  h.gate.allow = true;
  for (uint64_t c = 20; c <= 23; ++c) h.step(c);
  // Granted at cycle 20, plus the dispatch leg.
  REQUIRE(h.arrivals.size() == 1);
  CHECK(h.arrivals[0].cycle == 23);
}

TEST_CASE("an uncontended response beat delivers after the full merge depth") {
  Harness h;
  h.fabric.push_return(make_beat(0, 9, 3, 2, 1), 0);
  CHECK(h.fabric.response_beats_in_flight() == 1);
  for (uint64_t c = 0; c <= 16; ++c) h.step(c);
  CHECK(h.deliveries.empty());
  h.step(17);
  REQUIRE(h.deliveries.size() == 1);
  CHECK(h.deliveries[0].cycle == 17);
  CHECK(h.deliveries[0].cmd_id == 9);
  CHECK(h.deliveries[0].beat_index == 3);
  CHECK(h.fabric.response_beats_in_flight() == 0);
}

TEST_CASE("cluster merge grants round-robin over arrays") {
  Harness h;
  // Two beats waiting in each of arrays 0 and 1 of cluster 0.
  h.fabric.push_return(make_beat(0, 10, 0, 0, 0), 0);
  h.fabric.push_return(make_beat(0, 10, 1, 0, 0), 0);
  h.fabric.push_return(make_beat(0, 20, 0, 0, 1), 0);
  h.fabric.push_return(make_beat(0, 20, 1, 0, 1), 0);
  for (uint64_t c = 0; c <= 20; ++c) h.step(c);
  REQUIRE(h.deliveries.size() == 4);
  // Interleaved by the round-robin grant, one per cycle at the port.
  CHECK(h.deliveries[0].cmd_id == 10);
  CHECK(h.deliveries[1].cmd_id == 20);
  CHECK(h.deliveries[2].cmd_id == 10);
  CHECK(h.deliveries[3].cmd_id == 20);
  for (size_t i = 0; i < 4; ++i) CHECK(h.deliveries[i].cycle == 17 + i);
}

TEST_CASE("port merge grants round-robin over clusters") {
  Harness h;
  h.fabric.push_return(make_beat(0, 1, 0, 0, 0), 0);
  h.fabric.push_return(make_beat(0, 2, 0, 3, 0), 0);
  for (uint64_t c = 0; c <= 18; ++c) h.step(c);
  REQUIRE(h.deliveries.size() == 2);
  CHECK(h.deliveries[0].cmd_id == 1);
  CHECK(h.deliveries[0].cycle == 17);
  CHECK(h.deliveries[1].cmd_id == 2);
  CHECK(h.deliveries[1].cycle == 18);
}

TEST_CASE("commit notices deliver at the fixed channel depth in order") {
  Harness h;
  h.fabric.push_commit_notice(0, 30, 2, 5);
  h.fabric.push_commit_notice(0, 31, 0, 6);
  CHECK(h.fabric.notices_in_flight() == 2);
  for (uint64_t c = 0; c <= 21; ++c) h.step(c);
  CHECK(h.commits.empty());
  h.step(22);
  REQUIRE(h.commits.size() == 1);
  CHECK(h.commits[0].cmd_id == 30);
  CHECK(h.commits[0].beat_index == 2);
  h.step(23);
  REQUIRE(h.commits.size() == 2);
  CHECK(h.commits[1].cmd_id == 31);
  CHECK(h.fabric.notices_in_flight() == 0);
  CHECK(h.fabric.idle());
}
