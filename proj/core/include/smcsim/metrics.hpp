#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "smcsim/config.hpp"
#include "smcsim/protocol.hpp"

namespace smcsim {

/// Half-octave histogram bucket for a latency value: bucket 2k holds
/// [2^k, 1.5 * 2^k), bucket 2k+1 holds [1.5 * 2^k, 2^(k+1)), capped at 31.
/// Values 0 and 1 land in bucket 0; bucket 1 is never used.
uint32_t histogram_bucket(uint64_t value);

/// Latency distribution over every completed command of one direction.
struct LatencyStats {
  uint64_t count = 0;
  double avg = 0.0;
  double stddev = 0.0;  // population standard deviation
  uint64_t min = 0;
  uint64_t max = 0;
  std::array<uint64_t, 32> histogram{};

  bool operator==(const LatencyStats&) const = default;
};

/// Steady-state flow of one direction through one port, measured inside
/// the port's measurement window. avg_in_flight counts commands, averaged
/// over the window; throughput counts data beats per fabric cycle.
struct WindowFlow {
  uint64_t completed = 0;      // commands retiring inside the window
  double mean_latency = 0.0;   // over those commands
  double avg_in_flight = 0.0;  // time-averaged commands in flight
  uint64_t beats = 0;          // data beats moved inside the window
  double throughput = 0.0;     // beats / window length

  bool operator==(const WindowFlow&) const = default;
};

/// Everything measured at one master port. The measurement window opens at
/// twice the zero-load read latency (warm-up skipped) and closes at the
/// port's last command issue, so it is a property of the port's own stream
/// and identical between joint and solo runs over the same workload.
struct PortReport {
  uint32_t master = 0;
  uint64_t window_begin = 0;
  uint64_t window_end = 0;
  uint64_t first_issue_cycle = 0;
  uint64_t last_retire_cycle = 0;
  uint64_t reads_accepted = 0;
  uint64_t reads_completed = 0;
  uint64_t read_beats_delivered = 0;
  uint64_t writes_accepted = 0;
  uint64_t writes_completed = 0;
  uint64_t write_beats_injected = 0;
  WindowFlow read;
  WindowFlow write;
  LatencyStats read_latency;   // whole run
  LatencyStats write_latency;  // whole run

  bool operator==(const PortReport&) const = default;
};

/// One complete simulation result. Aggregate throughputs sum the per-port
/// window throughputs of the ports that issued any command.
struct RunReport {
  uint64_t seed = 0;
  uint64_t total_cycles = 0;
  bool truncated = false;
  uint64_t conflict_cycles = 0;
  uint64_t peak_split_occupancy = 0;
  uint32_t zero_load_read_latency = 0;
  double aggregate_read_throughput = 0.0;
  double aggregate_write_throughput = 0.0;
  std::string config_text;  // rendered configuration for reproduction
  std::vector<PortReport> ports;

  bool operator==(const RunReport&) const = default;
};

/// Collects per-command and per-beat events during a run and folds them
/// into a RunReport. Commands of one master must be recorded with densely
/// increasing cmd_id, which then serves as the record index.
class MetricsRecorder {
 public:
  explicit MetricsRecorder(uint32_t masters);

  void record_issue(uint32_t master, uint64_t cmd_id, Op op, uint32_t beats,
                    uint64_t cycle);
  void record_retire(uint32_t master, uint64_t cmd_id, uint64_t cycle);
  void record_read_delivery(uint32_t master, uint64_t cycle);
  void record_write_inject(uint32_t master, uint64_t cycle);

  /// Builds the report. For drained runs (truncated == false) every port is
  /// checked for conservation: all accepted commands retired and beat
  /// counts matching command beat totals; violations throw IntegrityError.
  RunReport finalize(const SimConfig& config, uint64_t seed,
                     uint64_t total_cycles, bool truncated,
                     uint64_t conflict_cycles,
                     uint64_t peak_split_occupancy) const;

 private:
  struct CommandRecord {
    uint64_t issue_cycle = 0;
    uint64_t retire_cycle = 0;  // kNotRetired until the last beat lands
    uint32_t beats = 0;
    Op op = Op::read;
  };
  struct PortSamples {
    std::vector<CommandRecord> commands;
    std::vector<uint64_t> read_delivery_cycles;  // non-decreasing
    std::vector<uint64_t> write_inject_cycles;   // non-decreasing
  };

  static constexpr uint64_t kNotRetired = ~0ull;

  std::vector<PortSamples> ports_;
};

/// Serialized report forms. JSON embeds every field including histograms
/// and is byte-stable: report_to_json(report_from_json(s)) == s. CSV is a
/// flat per-port table of the scalar columns.
std::string report_to_json(const RunReport& report);
RunReport report_from_json(const std::string& text);
std::string report_to_csv(const RunReport& report);

/// One port metric that differed between a joint run and the matching
/// solo run.
struct IsolationFinding {
  uint32_t master = 0;
  std::string field;
};

struct IsolationAudit {
  std::vector<IsolationFinding> findings;
  bool passed() const { return findings.empty(); }
};

/// Field-by-field comparison of each solo run's port against the same port
/// in the joint run. Every numeric field must match exactly; the workload
/// confinement makes the underlying event streams identical, so any drift
/// is a real interference channel.
IsolationAudit audit_isolation(
    const RunReport& joint,
    const std::vector<std::pair<uint32_t, RunReport>>& solos);

}  // namespace smcsim
