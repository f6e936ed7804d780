#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <ostream>
#include <vector>

#include "smcsim/config.hpp"
#include "smcsim/fabric.hpp"
#include "smcsim/memory.hpp"
#include "smcsim/metrics.hpp"
#include "smcsim/protocol.hpp"
#include "smcsim/rng.hpp"
#include "smcsim/workload.hpp"

namespace smcsim {

/// One complete simulation instance: ports, fabric, memory and the
/// workload lanes driving them, advanced a fabric cycle at a time.
///
/// Cycle phase order: response delivery, memory (arrivals, completions,
/// grants), request forwarding, then port issue and injection. A command
/// accepted in cycle c therefore injects its first beat in cycle c, and an
/// uncontended read's data beat is delivered exactly the zero-load latency
/// after its injection.
///
/// Runs are deterministic: the same configuration and seed produce the
/// same cycle count and byte-identical reports, and one master's command
/// stream is independent of which other masters are active.
class Simulation {
 public:
  static constexpr uint64_t kDefaultMaxCycles = 50'000'000;

  /// Builds the workload from the configuration (reading the trace file
  /// from disk when a trace assignment is present).
  Simulation(const SimConfig& config, uint64_t seed);

  /// As above with trace rows supplied directly.
  Simulation(const SimConfig& config, uint64_t seed,
             const std::vector<std::vector<TraceEntry>>& trace);

  /// Observes committed write data and returned read data.
  void set_memory_observer(MemoryObserver observer);

  /// Streams one line per fabric beat movement (debug aid).
  void set_fabric_trace(std::ostream* trace);

  /// Runs until every lane is exhausted and the system drains, or until
  /// max_cycles is hit (report.truncated is set and conservation checks
  /// are skipped). May be called once per instance.
  RunReport run(uint64_t max_cycles = kDefaultMaxCycles);

  uint64_t cycles() const { return cycles_; }
  const MemoryState& memory() const { return memory_; }
  const FabricState& fabric() const { return fabric_; }
  const PortState& port(uint32_t master) const { return ports_.at(master); }

 private:
  struct LaneRuntime {
    std::unique_ptr<LaneGenerator> generator;
    std::optional<CommandTemplate> pending;
    std::deque<Beat> inject;
    Rng gate;
    bool done = false;
  };
  struct MasterRuntime {
    std::vector<LaneRuntime> lanes;
    uint64_t next_cmd_id = 0;
  };

  void step(uint64_t cycle);
  void issue_phase(uint64_t cycle);
  bool drained() const;

  SimConfig config_;
  uint64_t seed_;
  AddressGeometry geom_;
  FabricState fabric_;
  MemoryState memory_;
  std::vector<PortState> ports_;
  std::vector<MasterRuntime> masters_;
  MetricsRecorder recorder_;
  uint64_t cycles_ = 0;
  bool ran_ = false;
};

}  // namespace smcsim
