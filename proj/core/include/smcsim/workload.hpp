#pragma once

#include <cstdint>
#include <istream>
#include <memory>
#include <optional>
#include <vector>

#include "smcsim/config.hpp"
#include "smcsim/protocol.hpp"

namespace smcsim {

/// One command a lane wants to issue. min_cycle holds the command back
/// until that cycle (used by replayed traces; zero otherwise).
struct CommandTemplate {
  Op op = Op::read;
  uint64_t base = 0;
  uint32_t beats = 1;
  uint64_t min_cycle = 0;
  uint64_t payload_seed = 0;
};

/// Pull source for one port lane. next() yields command templates in issue
/// order and nullopt once the lane is exhausted; generators are
/// deterministic functions of their construction arguments.
class LaneGenerator {
 public:
  virtual ~LaneGenerator() = default;
  virtual std::optional<CommandTemplate> next() = 0;
};

/// The address span a master's sequential traffic starts in. Every master
/// owns an equal slice of the address space; isolation mode confines all
/// of its traffic to that slice.
struct Region {
  uint64_t base = 0;
  uint64_t size = 0;
};

Region master_region(const TopologyConfig& topo, uint32_t master);

/// One parsed trace row, already validated against the topology.
struct TraceEntry {
  Op op = Op::read;
  uint64_t address = 0;
  uint32_t beats = 1;
  uint64_t min_cycle = 0;
};

/// Parses trace CSV rows "master,op,address_hex,beats[,min_cycle]" into
/// per-master entry lists preserving file order. Blank lines and lines
/// starting with '#' are skipped. Throws TraceError with the offending
/// line number on malformed or out-of-range rows.
std::vector<std::vector<TraceEntry>> load_trace(std::istream& in,
                                                const TopologyConfig& topo);

/// Loads the configured trace file when the assignment includes a trace
/// kind; returns empty entry lists otherwise. Throws TraceError when the
/// file cannot be opened.
std::vector<std::vector<TraceEntry>> load_trace_for(
    const WorkloadConfig& workload, const TopologyConfig& topo);

/// Lanes for one master, in fixed issue-priority order (read lane before
/// write lane when both exist; traces use a single mixed lane).
struct MasterWorkload {
  std::vector<std::unique_ptr<LaneGenerator>> lanes;
};

/// Builds every master's lane generators from the workload assignment.
/// The same (config, seed) pair always yields the same command streams,
/// and a master's stream does not depend on which other masters are
/// active. Trace assignments read workload.trace_file from disk.
std::vector<MasterWorkload> build_workload(const SimConfig& config,
                                           uint64_t seed);

/// As build_workload, but with trace rows supplied directly.
std::vector<MasterWorkload> build_workload(
    const SimConfig& config, uint64_t seed,
    const std::vector<std::vector<TraceEntry>>& trace);

}  // namespace smcsim
